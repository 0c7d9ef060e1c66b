use gf2ce_core::gadgets::*;
use gf2ce_core::syntax::{parse, print};

fn probe(name: &str, f: &gf2ce_core::Formula) {
    let text = print(f);
    match parse(&text) {
        Ok(back) => {
            if &back != f {
                // find the first divergent fragment by reprinting
                panic!(
                    "{name} mismatch:\nprinted: {text}\nreprint: {}",
                    print(&back)
                );
            }
        }
        Err(e) => panic!("{name} parse error {e}\n{text}"),
    }
}

#[test]
fn probe_gadget_roundtrips() {
    let m = TwoRegisterMachine {
        instructions: vec![Instr::Inc(0, 1)],
    };
    let g = rm_to_gf3(&m).unwrap();
    probe("rm phi1", &g.phi1);
    probe("rm phi2", &g.phi2);

    let atm = AlternatingTM {
        existential: vec!["s".into()],
        universal: vec![],
        accept: "acc".into(),
        reject: "rej".into(),
        start: "s".into(),
        input_alphabet: vec!["a".into()],
        work_alphabet: vec!["a".into(), "_".into()],
        blank: "_".into(),
        delta: vec![
            (
                ("s".into(), "a".into()),
                (
                    AtmTransition { state: "acc".into(), write: "a".into(), movement: 'R' },
                    AtmTransition { state: "acc".into(), write: "a".into(), movement: 'R' },
                ),
            ),
            (
                ("s".into(), "_".into()),
                (
                    AtmTransition { state: "acc".into(), write: "_".into(), movement: 'R' },
                    AtmTransition { state: "acc".into(), write: "_".into(), movement: 'R' },
                ),
            ),
        ],
    };
    let g = atm_to_gf2(&atm, &["a".into()]).unwrap();
    probe("atm phi1", &g.phi1);
    probe("atm phi2", &g.phi2);
}
