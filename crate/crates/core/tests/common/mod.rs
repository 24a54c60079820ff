#![allow(dead_code)]

use fep_core::features::{derive_schedule, CheckpointSchedule, FeatureConfig};
use fep_core::ingest::{experiment_cohort, generate_synthetic, SourceBundle, SyntheticSpec};
use fep_core::pipeline::{final_outcome_strata, stratified_split, ExperimentData, Split};

/// Exact rational p/q with q > 0.
#[derive(Debug, Clone, Copy)]
pub struct Ratio {
    pub num: i64,
    pub den: i64,
}

impl Ratio {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den > 0);
        let g = gcd(num.unsigned_abs(), den as u64).max(1) as i64;
        Ratio {
            num: num / g,
            den: den / g,
        }
    }

    pub fn add(self, o: Ratio) -> Ratio {
        Ratio::new(self.num * o.den + o.num * self.den, self.den * o.den)
    }

    pub fn div_int(self, k: i64) -> Ratio {
        Ratio::new(self.num, self.den * k)
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Brute-force earliness over the prefix `0..=upto`: scan each row from the
/// start, never-correct rows count as a full prefix.
pub fn oracle_earliness(rows: &[Vec<bool>], upto: usize) -> Ratio {
    let len = (upto + 1) as i64;
    let mut sum = Ratio::new(0, 1);
    for r in rows {
        let mut first = None;
        for (k, &c) in r.iter().take(upto + 1).enumerate() {
            if c {
                first = Some(k as i64);
                break;
            }
        }
        sum = sum.add(match first {
            Some(k) => Ratio::new(k, len),
            None => Ratio::new(1, 1),
        });
    }
    sum.div_int(rows.len() as i64)
}

/// Brute-force stability: test every (start, end) window for all-correct.
pub fn oracle_stability(rows: &[Vec<bool>], upto: usize) -> Ratio {
    let len = (upto + 1) as i64;
    let mut sum = Ratio::new(0, 1);
    for r in rows {
        let mut best = 0;
        for a in 0..=upto {
            for b in a..=upto {
                if r[a..=b].iter().all(|&c| c) {
                    best = best.max(b - a + 1);
                }
            }
        }
        sum = sum.add(Ratio::new(best as i64, len));
    }
    sum.div_int(rows.len() as i64)
}

/// Harmonic combination evaluated on exact rationals.
pub fn oracle_ess(e: Ratio, s: Ratio) -> f64 {
    let one_minus_e = Ratio::new(e.den - e.num, e.den);
    let denom = one_minus_e.add(s);
    if denom.num == 0 {
        return 0.0;
    }
    let num = Ratio::new(2 * one_minus_e.num * s.num, one_minus_e.den * s.den);
    (num.num as f64 * denom.den as f64) / (num.den as f64 * denom.num as f64)
}

pub fn grid_from_bits(bits: u32, n: usize, t: usize) -> Vec<Vec<bool>> {
    (0..n)
        .map(|i| (0..t).map(|j| bits >> (i * t + j) & 1 == 1).collect())
        .collect()
}

/// Bundles, schedule and split for one synthetic seed.
pub struct Bench {
    pub primary: SourceBundle,
    pub additional: Vec<SourceBundle>,
    pub schedule: CheckpointSchedule,
    pub split: Split,
}

impl Bench {
    pub fn new(spec: &SyntheticSpec, seed: u64) -> Bench {
        let (primary, additional) = generate_synthetic(spec, seed).unwrap();
        let schedule = derive_schedule(&primary).unwrap();
        let additional = vec![additional];
        let cohort = experiment_cohort(&primary, &additional);
        let strata = final_outcome_strata(&primary, &cohort);
        let split = stratified_split(&cohort, &strata, 0.2, seed).unwrap();
        Bench {
            primary,
            additional,
            schedule,
            split,
        }
    }

    pub fn data(&self) -> ExperimentData<'_> {
        ExperimentData {
            primary: &self.primary,
            additional: &self.additional,
            schedule: &self.schedule,
            features: FeatureConfig::default(),
            pass_threshold: 40.0,
        }
    }
}

pub fn small_spec(n_students: i64) -> SyntheticSpec {
    SyntheticSpec {
        n_students,
        n_checkpoints: 4,
        ..SyntheticSpec::default()
    }
}

/// 200 points on a jittered 2x2 layout, labelled by XOR of the quadrant.
pub fn xor_fixture() -> (Vec<f64>, Vec<f64>) {
    let mut values = Vec::with_capacity(400);
    let mut labels = Vec::with_capacity(200);
    for i in 0..200 {
        let qx = (i % 2) as f64;
        let qy = ((i / 2) % 2) as f64;
        let jx = ((i * 37) % 50) as f64 / 100.0;
        let jy = ((i * 53) % 50) as f64 / 100.0;
        values.push(qx + jx);
        values.push(qy + jy);
        labels.push(if (qx == 1.0) ^ (qy == 1.0) { 1.0 } else { 0.0 });
    }
    (values, labels)
}

pub fn matrix_and_labels(
    values: Vec<f64>,
    n_cols: usize,
    targets: &[f64],
) -> (
    fep_core::features::FeatureMatrix,
    fep_core::features::LabelVector,
) {
    use fep_core::features::{FeatureMatrix, Label, LabelVector};
    use fep_core::ingest::{SourceTag, StudentId};
    let ids: Vec<StudentId> = (0..targets.len())
        .map(|i| StudentId(format!("r{i}")))
        .collect();
    let names = (0..n_cols).map(|j| format!("f{j}")).collect();
    let x = FeatureMatrix::new(
        ids.clone(),
        names,
        values,
        0,
        std::collections::BTreeSet::from([SourceTag::Primary]),
    )
    .unwrap();
    let y = LabelVector {
        student_ids: ids,
        labels: targets
            .iter()
            .map(|&t| {
                if t == 1.0 {
                    Label::Success
                } else {
                    Label::Failure
                }
            })
            .collect(),
        target_assessment_id: "t".into(),
    };
    (x, y)
}
