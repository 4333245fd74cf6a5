//! The botanical classification of fully irreducible outer automorphisms.
//!
//! An outer automorphism Φ with expanding attracting tree T and repelling
//! tree T' falls into exactly one of four classes, read off from the
//! fixed-point indices of Φ and Φ⁻¹: writing `ind_f = ind(Φ)` and
//! `ind_b = ind(Φ⁻¹)`, both indices are positive half-integers bounded by
//! N−1, and
//!
//! * both equal to N−1 means Φ is geometric (induced by a surface
//!   homeomorphism),
//! * only `ind_f = N−1` means Φ is parageometric (T geometric, T' not),
//! * only `ind_b = N−1` means Φ⁻¹ is parageometric,
//! * both below N−1 means Φ is pseudo-Levitt.
//!
//! The geometric index of T and the Q-index of T' are both twice `ind_f`
//! (and symmetrically for the other pair), so the derived tree indices are
//! computed from the two fixed-point indices rather than from limit trees.
//! For parageometric Φ the expansion factor of Φ strictly exceeds that of
//! Φ⁻¹, and for geometric Φ the two are equal; `expansion_comparison`
//! checks these laws with exact algebraic arithmetic, and a violation is
//! always an internal bug, never a discovery.

use std::fmt;

use crate::algebraic::RealAlgebraic;
use crate::fixed_index::{
    attach_oracle, boundary_oracle, index_report_from_tt, periodic_structure, IndexReport,
    OracleAgreement,
};
use crate::graph::MarkingVerdict;
use crate::train_track::{bestvina_handel, TrainTrackMap};
use crate::turns::all_whitehead_connected;
use crate::words::Automorphism;
use crate::{Error, Result};

/// The four botanical classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BotanicalClass {
    /// Both trees geometric: induced by a surface homeomorphism.
    Geometric,
    /// Attracting tree geometric, repelling tree not.
    Parageometric,
    /// Repelling tree geometric, attracting tree not.
    InverseParageometric,
    /// Neither tree geometric.
    PseudoLevitt,
}

impl BotanicalClass {
    /// Canonical name, as emitted in reports.
    pub fn name(self) -> &'static str {
        match self {
            BotanicalClass::Geometric => "Geometric",
            BotanicalClass::Parageometric => "Parageometric",
            BotanicalClass::InverseParageometric => "InverseParageometric",
            BotanicalClass::PseudoLevitt => "PseudoLevitt",
        }
    }

    /// The class of the inverse automorphism.
    pub fn mirror(self) -> BotanicalClass {
        match self {
            BotanicalClass::Parageometric => BotanicalClass::InverseParageometric,
            BotanicalClass::InverseParageometric => BotanicalClass::Parageometric,
            other => other,
        }
    }
}

impl fmt::Display for BotanicalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A half-integer, stored exactly as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct HalfInt(i64);

impl HalfInt {
    /// Build from twice the value.
    pub fn from_doubled(d: i64) -> HalfInt {
        HalfInt(d)
    }
    /// Twice the value, always an integer.
    pub fn doubled(self) -> i64 {
        self.0
    }
    /// The value as a float (exact for half-integers).
    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }
    /// Whether the value is a whole integer.
    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Geometric/surface type of the attracting and repelling trees.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeTypes {
    /// T has maximal geometric index (is a geometric tree).
    pub attracting_geometric: bool,
    /// T has maximal Q-index (is of surface type).
    pub attracting_surface: bool,
    /// T' has maximal geometric index.
    pub repelling_geometric: bool,
    /// T' has maximal Q-index.
    pub repelling_surface: bool,
}

/// The full classification result.
#[derive(Clone, Debug)]
pub struct BotanicalReport {
    /// Rank of the free group.
    pub rank: u16,
    /// Expansion factor of Φ.
    pub lambda_forward: RealAlgebraic,
    /// Expansion factor of Φ⁻¹.
    pub lambda_backward: RealAlgebraic,
    /// Fixed-point index of Φ.
    pub ind_forward: HalfInt,
    /// Fixed-point index of Φ⁻¹.
    pub ind_backward: HalfInt,
    /// Geometric index of the attracting tree (= 2·ind_forward).
    pub igeo_t: i64,
    /// Q-index of the attracting tree (= 2·ind_backward).
    pub iq_t: i64,
    /// Geometric index of the repelling tree (= 2·ind_backward).
    pub igeo_tinv: i64,
    /// Q-index of the repelling tree (= 2·ind_forward).
    pub iq_tinv: i64,
    /// The botanical class.
    pub class: BotanicalClass,
    /// Tree-by-tree type data.
    pub tree_types: TreeTypes,
    /// Hypotheses and budget notes the class is conditional on.
    pub caveats: Vec<String>,
}

/// Options for the classification pipeline.
#[derive(Clone, Debug)]
pub struct ClassifyOptions {
    /// Run the boundary oracle and attach agreement data.
    pub oracle: bool,
    /// Twist ball radius for the oracle (None = the default
    /// 2·(max image length)·(rotationless exponent), capped internally).
    pub twist_bound: Option<usize>,
    /// Boundary signature depth for the oracle.
    pub depth: usize,
}

impl Default for ClassifyOptions {
    fn default() -> ClassifyOptions {
        ClassifyOptions {
            oracle: true,
            twist_bound: None,
            depth: 64,
        }
    }
}

/// Per-direction pipeline products.
#[derive(Debug)]
pub struct DirectionData {
    /// The train track representative.
    pub tt: TrainTrackMap,
    /// The index report (with oracle agreement attached when run).
    pub index: IndexReport,
    /// The oracle's own report, when run.
    pub oracle: Option<IndexReport>,
}

/// A classification together with the underlying per-direction data.
#[derive(Debug)]
pub struct Classification {
    /// The botanical report.
    pub report: BotanicalReport,
    /// Forward (Φ) pipeline data.
    pub forward: DirectionData,
    /// Backward (Φ⁻¹) pipeline data.
    pub backward: DirectionData,
}

/// Classify an (assumed fully irreducible) outer automorphism.
pub fn classify(phi: &Automorphism) -> Result<BotanicalReport> {
    Ok(classify_full(phi, &ClassifyOptions::default())?.report)
}

/// Classify with explicit options, returning all intermediate data.
pub fn classify_full(phi: &Automorphism, opts: &ClassifyOptions) -> Result<Classification> {
    let rank = phi.rank();
    if rank < 2 {
        return Err(Error::NotIrreducible(
            "rank must be at least 2 for an expanding irreducible automorphism".into(),
        ));
    }
    let (inv, _) = phi.invert()?;
    // The two directions are independent; run them as parallel tasks.
    let (fwd, bwd) = rayon::join(
        || run_direction(phi, opts),
        || run_direction(&inv, opts),
    );
    let (mut forward, mut backward) = (fwd?, bwd?);
    let mut caveats = Vec::new();

    let mut ind_f = resolve_direction("forward", &mut forward, &mut caveats)?;
    let mut ind_b = resolve_direction("backward", &mut backward, &mut caveats)?;
    let top = 2 * rank as i64 - 2;
    // A fully irreducible class has strictly positive index in both
    // directions; a zero total means the input violates the iwip
    // assumption.  Exceeding the global bound is a genuine internal error
    // (it is also enforced inside the index computation).
    for (name, ind) in [("forward", &mut ind_f), ("backward", &mut ind_b)] {
        if *ind <= 0 {
            return Err(Error::NotIrreducible(format!(
                "{} index 2·ind = {} is not positive; the class is not fully irreducible",
                name, ind
            )));
        }
        if *ind > top {
            return Err(Error::Internal(format!(
                "{} index 2·ind = {} outside the admissible range (0, {}]",
                name, ind, top
            )));
        }
    }
    let class = match (ind_f == top, ind_b == top) {
        (true, true) => BotanicalClass::Geometric,
        (true, false) => BotanicalClass::Parageometric,
        (false, true) => BotanicalClass::InverseParageometric,
        (false, false) => BotanicalClass::PseudoLevitt,
    };
    let tree_types = TreeTypes {
        attracting_geometric: ind_f == top,
        attracting_surface: ind_b == top,
        repelling_geometric: ind_b == top,
        repelling_surface: ind_f == top,
    };
    caveats.push(
        "class is conditional on the iwip hypothesis; primitivity and Whitehead \
         connectivity were checked for both directions, which is necessary but \
         not sufficient"
            .into(),
    );
    let report = BotanicalReport {
        rank,
        lambda_forward: forward.tt.lambda().clone(),
        lambda_backward: backward.tt.lambda().clone(),
        ind_forward: HalfInt::from_doubled(ind_f),
        ind_backward: HalfInt::from_doubled(ind_b),
        igeo_t: ind_f,
        iq_t: ind_b,
        igeo_tinv: ind_b,
        iq_tinv: ind_f,
        class,
        tree_types,
        caveats,
    };
    // Memo-table coherence: geometric exactly when all four tree indices
    // are maximal.
    let all_max = report.igeo_t == top
        && report.iq_t == top
        && report.igeo_tinv == top
        && report.iq_tinv == top;
    if (report.class == BotanicalClass::Geometric) != all_max {
        return Err(Error::Internal(
            "memo table violated: geometric class must coincide with maximal tree indices".into(),
        ));
    }
    if let ComparisonVerdict::Inconsistent(why) = expansion_comparison(&report) {
        return Err(Error::Internal(format!(
            "expansion factor comparison violates the classification: {}",
            why
        )));
    }
    Ok(Classification {
        report,
        forward,
        backward,
    })
}

/// Train track, iwip-consistency gate, index report and oracle for one
/// direction.
fn run_direction(aut: &Automorphism, opts: &ClassifyOptions) -> Result<DirectionData> {
    let tt = bestvina_handel(aut)?;
    let l2 = tt.taken_turns()?;
    if !all_whitehead_connected(&tt.map, &l2) {
        return Err(Error::NotIrreducible(
            "a Whitehead graph of the train track map is disconnected; the outer class \
             is reducible or has finite-order pieces"
                .into(),
        ));
    }
    let mut index = index_report_from_tt(&tt)?;
    let oracle = if opts.oracle {
        // Default ball radius: enough to reach every essential twist the
        // train track side reports, plus the marking conjugator offset that
        // relates the two lift labellings.
        let bound = opts.twist_bound.unwrap_or_else(|| {
            let conj_slack = match &tt.marking {
                MarkingVerdict::Verified { conjugator } => 2 * conjugator.len(),
                _ => 2,
            };
            let twist_max = index
                .classes
                .iter()
                .filter(|c| c.double_index > 0)
                .map(|c| c.twist.len())
                .max()
                .unwrap_or(0);
            twist_max + conj_slack + 1
        });
        let oracle = boundary_oracle(aut, bound, opts.depth)?;
        attach_oracle(&mut index, &oracle);
        Some(oracle)
    } else {
        None
    };
    Ok(DirectionData { tt, index, oracle })
}

/// Decide which index value a direction contributes, applying the oracle
/// authority rule when the train-track search was incomplete.
fn resolve_direction(
    name: &str,
    dir: &mut DirectionData,
    caveats: &mut Vec<String>,
) -> Result<i64> {
    for c in &dir.index.caveats {
        caveats.push(format!("{}: {}", name, c));
    }
    let mut ind = dir.index.double_total;
    if let Some(oracle) = &dir.oracle {
        match dir.index.oracle_agreement {
            OracleAgreement::Agree => {}
            OracleAgreement::Disagree => {
                if !dir.index.complete && oracle.complete {
                    // The Nielsen-path search was budget-limited but the
                    // oracle ran clean: the oracle is authoritative.
                    ind = oracle.double_total;
                    caveats.push(format!(
                        "{}: train-track Nielsen data incomplete; oracle index {}/2 adopted",
                        name, oracle.double_total
                    ));
                } else if dir.index.complete && oracle.complete {
                    return Err(Error::Internal(format!(
                        "{} index {}/2 disagrees with completed oracle {}/2",
                        name, dir.index.double_total, oracle.double_total
                    )));
                } else {
                    caveats.push(format!(
                        "{}: incomplete oracle differs ({}/2 vs {}/2); train-track value retained",
                        name, oracle.double_total, dir.index.double_total
                    ));
                }
            }
            OracleAgreement::OracleSkipped => {}
        }
    } else if !dir.index.complete {
        caveats.push(format!(
            "{}: index is budget-limited and no oracle was run",
            name
        ));
    }
    Ok(ind)
}

/// Verdict of the expansion factor comparison laws.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ComparisonVerdict {
    /// The expansion factors satisfy the law for the assigned class.
    Consistent,
    /// They do not; this indicates an internal bug.
    Inconsistent(String),
}

/// Check the expansion-factor laws: geometric requires λ_f = λ_b exactly,
/// parageometric requires λ_f > λ_b, and the pseudo-Levitt case is
/// unconstrained.
pub fn expansion_comparison(report: &BotanicalReport) -> ComparisonVerdict {
    use std::cmp::Ordering;
    let lf = &report.lambda_forward;
    let lb = &report.lambda_backward;
    match report.class {
        BotanicalClass::Geometric => {
            if lf.equals(lb) {
                ComparisonVerdict::Consistent
            } else {
                ComparisonVerdict::Inconsistent(format!(
                    "geometric class but λ_f = {} differs from λ_b = {}",
                    lf.decimal_string(6),
                    lb.decimal_string(6)
                ))
            }
        }
        BotanicalClass::Parageometric => {
            if lf.cmp(lb) == Ordering::Greater {
                ComparisonVerdict::Consistent
            } else {
                ComparisonVerdict::Inconsistent(format!(
                    "parageometric class but λ_f = {} is not greater than λ_b = {}",
                    lf.decimal_string(6),
                    lb.decimal_string(6)
                ))
            }
        }
        BotanicalClass::InverseParageometric => {
            if lb.cmp(lf) == Ordering::Greater {
                ComparisonVerdict::Consistent
            } else {
                ComparisonVerdict::Inconsistent(format!(
                    "inverse-parageometric class but λ_b = {} is not greater than λ_f = {}",
                    lb.decimal_string(6),
                    lf.decimal_string(6)
                ))
            }
        }
        BotanicalClass::PseudoLevitt => ComparisonVerdict::Consistent,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::{Letter, ReducedWord};

    fn w(s: &str) -> ReducedWord {
        let mut out = ReducedWord::empty();
        for ch in s.chars() {
            if ch.is_ascii_lowercase() {
                out.push(Letter::positive(ch as u16 - b'a' as u16));
            } else if ch.is_ascii_uppercase() {
                out.push(Letter::negative(ch as u16 - b'A' as u16));
            }
        }
        out
    }

    fn aut(rank: u16, images: &[&str]) -> Automorphism {
        Automorphism::new(rank, images.iter().map(|s| w(s)).collect()).unwrap()
    }

    fn paper_phi() -> Automorphism {
        aut(3, &["b", "ac", "a"])
    }

    fn fib() -> Automorphism {
        aut(2, &["ab", "a"])
    }

    #[test]
    fn paper_map_is_pseudo_levitt() {
        let report = classify(&paper_phi()).unwrap();
        assert_eq!(report.class, BotanicalClass::PseudoLevitt);
        assert_eq!(report.ind_forward.doubled(), 3);
        assert_eq!(report.ind_backward.doubled(), 1);
        assert_eq!(report.igeo_t, 3);
        assert_eq!(report.iq_tinv, 3);
        assert_eq!(report.igeo_tinv, 1);
        assert_eq!(report.iq_t, 1);
        assert!(report.igeo_t < 4 && report.iq_t < 4);
        assert!((report.lambda_forward.to_f64() - 1.3247).abs() < 5e-4);
        assert!((report.lambda_backward.to_f64() - 1.4655).abs() < 5e-4);
        assert_eq!(expansion_comparison(&report), ComparisonVerdict::Consistent);
        assert!(!report.tree_types.attracting_geometric);
        assert!(!report.tree_types.repelling_geometric);
    }

    #[test]
    fn fibonacci_is_geometric() {
        let report = classify(&fib()).unwrap();
        assert_eq!(report.class, BotanicalClass::Geometric);
        assert_eq!(report.ind_forward.doubled(), 2);
        assert_eq!(report.ind_backward.doubled(), 2);
        assert!(report.lambda_forward.equals(&report.lambda_backward));
        assert!(report.tree_types.attracting_geometric);
        assert!(report.tree_types.attracting_surface);
        assert_eq!(expansion_comparison(&report), ComparisonVerdict::Consistent);
    }

    #[test]
    fn mirror_law_on_examples() {
        let fwd = classify(&paper_phi()).unwrap();
        let (inv, _) = paper_phi().invert().unwrap();
        let bwd = classify(&inv).unwrap();
        assert_eq!(bwd.class, fwd.class.mirror());
        assert_eq!(bwd.ind_forward, fwd.ind_backward);
        assert_eq!(bwd.ind_backward, fwd.ind_forward);
    }

    #[test]
    fn reducible_input_is_rejected() {
        let phi = aut(2, &["a", "ab"]);
        let err = classify(&phi).unwrap_err();
        assert!(matches!(err, Error::NotIrreducible(_)));
    }

    #[test]
    fn synthetic_geometric_with_distinct_factors_is_inconsistent() {
        let mut report = classify(&fib()).unwrap();
        report.class = BotanicalClass::Geometric;
        report.lambda_backward = RealAlgebraic::from_rational(crate::Rat::from(
            num::BigInt::from(2),
        ));
        assert!(matches!(
            expansion_comparison(&report),
            ComparisonVerdict::Inconsistent(_)
        ));
    }

    #[test]
    fn half_integer_formatting() {
        assert_eq!(HalfInt::from_doubled(3).to_string(), "3/2");
        assert_eq!(HalfInt::from_doubled(2).to_string(), "1");
        assert!(HalfInt::from_doubled(2).is_integer());
        assert!(!HalfInt::from_doubled(3).is_integer());
        assert_eq!(HalfInt::from_doubled(3).as_f64(), 1.5);
    }

    #[test]
    fn classes_without_oracle_match() {
        let opts = ClassifyOptions {
            oracle: false,
            ..ClassifyOptions::default()
        };
        let full = classify_full(&paper_phi(), &opts).unwrap();
        assert_eq!(full.report.class, BotanicalClass::PseudoLevitt);
        assert!(full.forward.oracle.is_none());
        assert_eq!(
            full.forward.index.oracle_agreement,
            OracleAgreement::OracleSkipped
        );
    }
}
