use csb_core::channel::Defense;
use csb_core::experiments::{episode_rx_snr_db, episode_ser, run_attack, ser_defenses};
use csb_core::{ExperimentConfig, Resolution};

const SYMBOLS: usize = 8200;

fn config(epsilon_deg: f64) -> ExperimentConfig {
    let mut c = ExperimentConfig { seed: Some(11), ..Default::default() };
    c.attack.epsilon_deg = epsilon_deg;
    c
}

#[test]
fn csb_corrupts_an_eavesdropper_outside_the_receiver_beam() {
    let cfg = config(20.0);
    let run = run_attack(&cfg, Resolution::Bits(2)).unwrap();
    let defenses = ser_defenses(&[0.3, 0.5, 0.7, 0.9]).unwrap();
    for snr in [10.0, 20.0] {
        let ser: Vec<_> = defenses.iter().map(|&d| episode_ser(&run, d, 4, snr, SYMBOLS, 3, false).unwrap().0).collect();
        let (none, csb) = (ser[0], ser[1]);
        assert!(csb.eve_ser() > 0.7, "{snr} dB: csb eve SER {}", csb.eve_ser());
        assert!(none.eve_ser() < 0.05);
        for (d, asm) in defenses[2..].iter().zip(&ser[2..]) {
            assert!(csb.eve_ser() >= asm.eve_ser(), "{snr} dB {}: {} < {}", d.label(), csb.eve_ser(), asm.eve_ser());
            assert!(csb.rx_ser() <= asm.rx_ser(), "{snr} dB {}", d.label());
        }
    }
}

#[test]
fn receiver_snr_orders_csb_above_every_asm_fraction() {
    let cfg = config(3.0);
    let run = run_attack(&cfg, Resolution::Bits(2)).unwrap();
    let none = episode_rx_snr_db(&run, Defense::None, 10.0, 256, 5).unwrap();
    let csb = episode_rx_snr_db(&run, Defense::Csb, 10.0, 256, 5).unwrap();
    assert_eq!(none, 10.0);
    // the moving receiver is off-grid, so compensation is slightly imperfect
    assert!(csb < none && csb > none - 0.5, "{csb}");
    let mut prev = f64::NEG_INFINITY;
    for d in ser_defenses(&[0.3, 0.5, 0.7, 0.9]).unwrap().into_iter().skip(2) {
        let s = episode_rx_snr_db(&run, d, 10.0, 256, 5).unwrap();
        assert!(s > prev && s < csb, "{}: {s}", d.label());
        prev = s;
    }
}

#[test]
fn mainlobe_hugging_eavesdropper_is_not_scrambled() {
    // at the reference ε the planned eavesdropper stays inside the receiver's
    // beam cell, where every shift rotates both links alike
    let run = run_attack(&config(3.0), Resolution::Bits(2)).unwrap();
    let (csb, _) = episode_ser(&run, Defense::Csb, 4, 20.0, SYMBOLS, 3, false).unwrap();
    assert!(csb.eve_ser() < 0.01, "{}", csb.eve_ser());
}
