//! Target tasks, training-sample machinery, and the fitness and
//! generalization functionals.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bits::{hamming_distance, Bits};
use crate::error::{Error, Result};
use crate::network::{BooleanNetwork, EvalPolicy, INPUT_SPACE_CAP};

/// The three target tasks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    /// Output 1 iff the input has an odd number of 1s.
    EvenOdd,
    /// Halves of the input ANDed bit by bit.
    BitwiseAnd,
    /// Output is the input with its bit positions permuted.
    Mapping,
}

/// A target Boolean mapping from `I` input bits to `O` output bits.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub i: usize,
    pub o: usize,
    /// Mapping task only: output position `j` reads input position `perm[j]`.
    perm: Option<Vec<usize>>,
    /// Mapping task only: score by popcount agreement instead of the exact
    /// permuted target ("same number of 1 bits" reading).
    relational: bool,
}

impl TaskSpec {
    pub fn even_odd(i: usize) -> Self {
        assert!(i >= 1 && i <= 63);
        TaskSpec {
            kind: TaskKind::EvenOdd,
            i,
            o: 1,
            perm: None,
            relational: false,
        }
    }

    /// Bitwise AND of two `l`-bit halves; the network sees `I = 2l` inputs.
    pub fn bitwise_and(l: usize) -> Self {
        assert!(l >= 1 && 2 * l <= 63);
        TaskSpec {
            kind: TaskKind::BitwiseAnd,
            i: 2 * l,
            o: l,
            perm: None,
            relational: false,
        }
    }

    /// Mapping task with a permutation drawn once from `seed`.
    pub fn mapping(l: usize, seed: u64) -> Self {
        assert!(l >= 1 && l <= 63);
        let mut perm: Vec<usize> = (0..l).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Self::mapping_with_perm(perm)
    }

    pub fn mapping_with_perm(perm: Vec<usize>) -> Self {
        let l = perm.len();
        assert!(l >= 1 && l <= 63);
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        assert!(
            sorted.iter().enumerate().all(|(i, &v)| i == v),
            "perm must be a permutation of 0..l"
        );
        TaskSpec {
            kind: TaskKind::Mapping,
            i: l,
            o: l,
            perm: Some(perm),
            relational: false,
        }
    }

    /// Switches the mapping task to the relational scorer.
    pub fn with_relational_scorer(mut self) -> Self {
        assert_eq!(self.kind, TaskKind::Mapping);
        self.relational = true;
        self
    }

    /// Size of the full input space, `m' = 2^I`.
    pub fn input_space_size(&self) -> u64 {
        1u64 << self.i
    }

    pub fn target(&self, input: &Bits) -> Bits {
        assert_eq!(input.len(), self.i);
        match self.kind {
            TaskKind::EvenOdd => Bits::new(1, target_even_odd(input) as u64),
            TaskKind::BitwiseAnd => {
                let (a, b) = input.split_at(self.i / 2);
                target_bitwise_and(&a, &b).unwrap()
            }
            TaskKind::Mapping => target_mapping(input, self.perm.as_ref().unwrap()),
        }
    }

    /// Normalized per-pattern distance in [0, 1] between what the network
    /// produced and what the task wanted. Hamming distance divided by O;
    /// the relational mapping scorer uses the popcount gap instead.
    pub fn distance(&self, input: &Bits, target: &Bits, actual: &Bits) -> f64 {
        if self.relational {
            let diff = (actual.popcount() as f64 - input.popcount() as f64).abs();
            diff / self.o as f64
        } else {
            hamming_distance(target, actual).expect("pattern widths match") as f64 / self.o as f64
        }
    }

    fn check_dims(&self, net: &BooleanNetwork) -> Result<()> {
        if net.i() != self.i || net.o() != self.o {
            return Err(Error::TaskDimMismatch {
                task_i: self.i,
                task_o: self.o,
                net_i: net.i(),
                net_o: net.o(),
            });
        }
        Ok(())
    }
}

/// Parity bit of the input: 1 iff the number of 1s is odd.
pub fn target_even_odd(input: &Bits) -> bool {
    input.popcount() % 2 == 1
}

/// Elementwise AND of two equal-length halves.
pub fn target_bitwise_and(a: &Bits, b: &Bits) -> Result<Bits> {
    a.and(b)
}

/// Output position `j` takes input position `perm[j]`. Preserves popcount.
pub fn target_mapping(input: &Bits, perm: &[usize]) -> Bits {
    let mut out = Bits::zeros(perm.len());
    for (j, &p) in perm.iter().enumerate() {
        out.set(j, input.get(p));
    }
    out
}

/// A training-sample request: `m` patterns out of the `2^I` input space.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SampleSpec {
    pub m: u64,
    pub seed: u64,
}

impl SampleSpec {
    pub fn new(m: u64, seed: u64) -> Self {
        SampleSpec { m, seed }
    }

    /// The sample as a fraction of an `i`-bit input space.
    pub fn fraction(&self, i: usize) -> f64 {
        self.m as f64 / (1u64 << i) as f64
    }
}

/// Distinct (input, target) pairs sampled without replacement.
#[derive(Clone, Debug, PartialEq)]
pub struct PatternSet {
    patterns: Vec<(Bits, Bits)>,
}

impl PatternSet {
    /// Draws `spec.m` distinct inputs uniformly without replacement and
    /// pairs them with the task's target outputs.
    pub fn draw(task: &TaskSpec, spec: &SampleSpec) -> Result<Self> {
        let m_prime = task.input_space_size();
        if spec.m == 0 {
            return Err(Error::EmptySample);
        }
        if spec.m > m_prime {
            return Err(Error::SampleTooLarge {
                m: spec.m,
                m_prime,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let indices =
            rand::seq::index::sample(&mut rng, m_prime as usize, spec.m as usize).into_vec();
        let patterns = indices
            .into_iter()
            .map(|j| {
                let input = Bits::new(task.i, j as u64);
                let target = task.target(&input);
                (input, target)
            })
            .collect();
        Ok(PatternSet { patterns })
    }

    /// The full input space in ascending binary order.
    pub fn full(task: &TaskSpec) -> Self {
        let patterns = (0..task.input_space_size())
            .map(|j| {
                let input = Bits::new(task.i, j);
                (input, task.target(&input))
            })
            .collect();
        PatternSet { patterns }
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Bits, Bits)> {
        self.patterns.iter()
    }

    /// CSV with columns `input_bits,target_bits`; binary strings, leftmost
    /// character = input node 1.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["input_bits", "target_bits"])?;
        for (input, target) in &self.patterns {
            w.write_record([input.to_string(), target.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut patterns = Vec::new();
        for record in r.records() {
            let record = record?;
            let input: Bits = record
                .get(0)
                .ok_or_else(|| Error::TextFormat("missing input_bits".into()))?
                .parse()?;
            let target: Bits = record
                .get(1)
                .ok_or_else(|| Error::TextFormat("missing target_bits".into()))?
                .parse()?;
            patterns.push((input, target));
        }
        Ok(PatternSet { patterns })
    }
}

/// Training fitness `f = 1 - mean normalized distance` over the sample.
pub fn fitness(net: &BooleanNetwork, task: &TaskSpec, sample: &PatternSet) -> Result<f64> {
    fitness_with(net, task, sample, &EvalPolicy::ZeroInit)
}

pub fn fitness_with(
    net: &BooleanNetwork,
    task: &TaskSpec,
    sample: &PatternSet,
    policy: &EvalPolicy,
) -> Result<f64> {
    task.check_dims(net)?;
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut total = 0.0;
    for (input, target) in sample.iter() {
        let actual = net.evaluate_with(input, policy);
        total += task.distance(input, target, &actual);
    }
    Ok(1.0 - total / sample.len() as f64)
}

/// Generalization `g`: the same score over the entire input space.
pub fn generalization(net: &BooleanNetwork, task: &TaskSpec) -> Result<f64> {
    generalization_with(net, task, &EvalPolicy::ZeroInit)
}

pub fn generalization_with(
    net: &BooleanNetwork,
    task: &TaskSpec,
    policy: &EvalPolicy,
) -> Result<f64> {
    task.check_dims(net)?;
    let nbits = task.input_space_size() * task.o as u64;
    if task.i >= 40 || nbits > INPUT_SPACE_CAP {
        return Err(Error::InputSpaceTooLarge {
            inputs: task.i,
            outputs: task.o,
            cap: INPUT_SPACE_CAP,
        });
    }
    fitness_with(net, task, &PatternSet::full(task), policy)
}
