use fg_botany::botany::{classify_full, ClassifyOptions};
use fg_botany::fixed_index::OracleAgreement;
use fg_botany::sample::sample_batch;
use fg_botany::Error;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let count: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let bound: Option<usize> = args.get(2).and_then(|s| s.parse().ok());
    let t0 = std::time::Instant::now();
    let autos = sample_batch(3, 20, count, 2026);
    let opts = ClassifyOptions { oracle: true, twist_bound: bound, depth: 48 };
    let (mut ok, mut reducible, mut indet, mut internal) = (0, 0, 0, 0);
    let (mut clean_agree, mut disagree_complete, mut disagree_incomplete, mut other_agree) = (0, 0, 0, 0);
    let mut classes = std::collections::BTreeMap::<String, usize>::new();
    for (i, phi) in autos.iter().enumerate() {
        match classify_full(phi, &opts) {
            Ok(full) => {
                ok += 1;
                *classes.entry(full.report.class.name().into()).or_default() += 1;
                for (dn, d) in [("f", &full.forward), ("b", &full.backward)] {
                    let oc = d.oracle.as_ref().map(|o| o.complete).unwrap_or(false);
                    match d.index.oracle_agreement {
                        OracleAgreement::Agree => {
                            if oc && d.index.complete { clean_agree += 1 } else { other_agree += 1 }
                        }
                        OracleAgreement::Disagree => {
                            if oc {
                                disagree_complete += 1;
                                println!(
                                    "  [{i}/{dn}] DISAGREE-ON-COMPLETE-ORACLE: tt={}/2 (complete={}) oracle={}/2",
                                    d.index.double_total, d.index.complete,
                                    d.oracle.as_ref().unwrap().double_total
                                );
                                println!("     tt classes: {:?}", d.index.classes.iter().map(|c| (c.att_count, c.fix_rank)).collect::<Vec<_>>());
                                println!("     or classes: {:?}", d.oracle.as_ref().unwrap().classes.iter().map(|c| (c.att_count, c.fix_rank)).collect::<Vec<_>>());
                            } else {
                                disagree_incomplete += 1;
                            }
                        }
                        OracleAgreement::OracleSkipped => {}
                    }
                }
            }
            Err(Error::NotIrreducible(_)) => reducible += 1,
            Err(Error::Indeterminate(_)) => indet += 1,
            Err(e) => { internal += 1; println!("  [{i}] INTERNAL: {e}"); }
        }
    }
    println!("ok={ok} reducible={reducible} indet={indet} internal={internal}");
    println!("clean-agree={clean_agree} disagree-complete={disagree_complete} disagree-incomplete={disagree_incomplete} other-agree={other_agree}");
    println!("classes: {classes:?}");
    println!("elapsed: {:?}", t0.elapsed());
}
