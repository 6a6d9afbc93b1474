//! Three-party linkage protocol.
//!
//! Parties A and B each mine a private gram base from their own data, one of
//! them merges the two into the shared base, both embed their records, A
//! computes a personalized threshold per record, and the third party C
//! reports, for every A vector, the B vectors within that threshold.
//! C only ever sees the shared base, vectors and thresholds.
//!
//! Parties exchange [`Message`]s whose payloads use the encodings in
//! [`wire`]; every transmission is recorded in a [`Transcript`] with its
//! byte size.

pub mod wire;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dp::{LaplaceSampler, PrivacyBudget};
use crate::embedding::{embed_dataset, thresholds_for_dataset, EmbeddedVector, GramBase, ThresholdSet};
use crate::error::{Error, Result};
use crate::harness::baselines::random_base;
use crate::mining::fpm::{fpm_mine, MinerConfig};
use crate::mining::ptree::{ptree_mine, Allocation, TreeConfig};
use crate::mining::{exact_top_k, rank_order, ScoredGram};
use crate::records::{Alphabet, Dataset, RecordId};
use crate::strings::Gram;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    A,
    B,
    C,
    Driver,
}

impl Role {
    /// Random stream of this party's sampler under a shared seed.
    pub fn stream(self) -> u64 {
        match self {
            Role::A => 1,
            Role::B => 2,
            Role::C => 3,
            Role::Driver => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MessageKind {
    PrivateBase,
    SharedBase,
    VectorSet,
    ThresholdSet,
    MatchReport,
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub kind: MessageKind,
    pub from: Role,
    pub to: Role,
    pub payload: Vec<u8>,
}

impl Message {
    pub fn byte_size(&self) -> usize {
        self.payload.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub kind: MessageKind,
    pub from: Role,
    pub to: Role,
    pub bytes: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindTotals {
    pub total_bytes: usize,
    pub count: usize,
}

/// Log of every transmission. Payloads are retained so their content can be
/// audited; only sizes are part of the summary.
#[derive(Debug, Clone, Default)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
    payloads: Vec<Message>,
}

impl Transcript {
    fn record(&mut self, msg: &Message) {
        self.entries.push(TranscriptEntry {
            kind: msg.kind,
            from: msg.from,
            to: msg.to,
            bytes: msg.byte_size(),
        });
        self.payloads.push(msg.clone());
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn messages(&self) -> &[Message] {
        &self.payloads
    }

    pub fn summary(&self) -> BTreeMap<MessageKind, KindTotals> {
        let mut out: BTreeMap<MessageKind, KindTotals> = BTreeMap::new();
        for e in &self.entries {
            let t = out.entry(e.kind).or_default();
            t.total_bytes += e.bytes;
            t.count += 1;
        }
        out
    }

    pub fn bytes_of(&self, kind: MessageKind) -> usize {
        self.summary().get(&kind).map_or(0, |t| t.total_bytes)
    }

    pub fn total_bytes(&self) -> usize {
        self.entries.iter().map(|e| e.bytes).sum()
    }

    /// `{kind: {total_bytes, count}}`.
    pub fn summary_json(&self) -> Result<String> {
        let named: BTreeMap<String, KindTotals> = self.summary().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        Ok(serde_json::to_string_pretty(&named)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MinerKind {
    Fpm,
    PtreeLinear,
    PtreeExponential,
    PtreeAdaptive,
    PtreeHybrid,
    /// Exact supports, no noise.
    Nonprivate,
    /// Data-independent random grams generated by A.
    Random,
}

impl MinerKind {
    pub const ALL: [MinerKind; 7] = [
        MinerKind::Fpm,
        MinerKind::PtreeLinear,
        MinerKind::PtreeExponential,
        MinerKind::PtreeAdaptive,
        MinerKind::PtreeHybrid,
        MinerKind::Nonprivate,
        MinerKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MinerKind::Fpm => "fpm",
            MinerKind::PtreeLinear => "ptree-linear",
            MinerKind::PtreeExponential => "ptree-exponential",
            MinerKind::PtreeAdaptive => "ptree-adaptive",
            MinerKind::PtreeHybrid => "ptree-hybrid",
            MinerKind::Nonprivate => "nonprivate",
            MinerKind::Random => "random",
        }
    }

    pub fn is_private(self) -> bool {
        !matches!(self, MinerKind::Nonprivate | MinerKind::Random)
    }

    /// Budget schedule of the prefix-tree miners.
    pub fn allocation(self) -> Option<Allocation> {
        match self {
            MinerKind::PtreeLinear => Some(Allocation::Linear),
            MinerKind::PtreeExponential => Some(Allocation::Exponential),
            MinerKind::PtreeAdaptive => Some(Allocation::Adaptive),
            MinerKind::PtreeHybrid => Some(Allocation::Hybrid),
            _ => None,
        }
    }
}

impl fmt::Display for MinerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MinerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MinerKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown miner {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    /// One thread, fixed order: A-mine, B-mine, merge, A-embed, B-embed,
    /// A-thresholds, C-match.
    #[default]
    Sequential,
    /// One worker thread per party exchanging messages.
    Threaded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolConfig {
    pub miner: MinerKind,
    pub epsilon: f64,
    pub k: usize,
    pub q_min: usize,
    pub q_max: usize,
    pub ed: usize,
    /// Each party mines with ε/2 instead of ε.
    pub split_budget: bool,
    /// Prefix-tree depth; `None` uses the rounded average record length of
    /// the mining party's own dataset.
    pub h_max: Option<usize>,
    /// Prefix-tree empty-partition threshold; `None` is `sqrt(2)/ε̃`.
    pub theta: Option<f64>,
    pub gamma: f64,
    pub noise_factor: f64,
    pub seed: u64,
    /// Party that merges the private bases (A or B).
    pub merger: Role,
    pub schedule: Schedule,
    pub alphabet: Alphabet,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            miner: MinerKind::Fpm,
            epsilon: 0.1,
            k: 75,
            q_min: 1,
            q_max: 3,
            ed: 1,
            split_budget: false,
            h_max: None,
            theta: None,
            gamma: 0.0,
            noise_factor: 2.0,
            seed: 1,
            merger: Role::A,
            schedule: Schedule::Sequential,
            alphabet: Alphabet::uppercase(),
        }
    }
}

impl ProtocolConfig {
    /// Budget each data-holding party may spend.
    pub fn party_epsilon(&self) -> f64 {
        if self.split_budget {
            self.epsilon / 2.0
        } else {
            self.epsilon
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon must be positive"));
        }
        if self.k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if self.q_min == 0 || self.q_min > self.q_max {
            return Err(Error::invalid("need 1 <= q_min <= q_max"));
        }
        if !matches!(self.merger, Role::A | Role::B) {
            return Err(Error::invalid("the merger must be party A or B"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub id_a: RecordId,
    pub id_b: RecordId,
    pub distance: f64,
}

/// Neighbor sets flattened into `(id_a, id_b, d')` triples, grouped by A
/// record in A's order and by B's order within a group.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub pairs: Vec<MatchPair>,
}

impl MatchResult {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Rows of `id_A \t id_B \t d_prime`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for p in &self.pairs {
            out.push_str(&format!("{}\t{}\t{}\n", p.id_a, p.id_b, p.distance));
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            let bad = || Error::invalid(format!("match line {}: expected id_A, id_B, d'", n + 1));
            if f.len() != 3 {
                return Err(bad());
            }
            pairs.push(MatchPair {
                id_a: RecordId(f[0].parse().map_err(|_| bad())?),
                id_b: RecordId(f[1].parse().map_err(|_| bad())?),
                distance: f[2].parse().map_err(|_| bad())?,
            });
        }
        Ok(MatchResult { pairs })
    }
}

/// Unions the two private bases, summing the frequencies of shared grams,
/// and keeps the top `k` (ties broken lexicographically) in rank order.
pub fn merge_bases(base_a: &[ScoredGram], base_b: &[ScoredGram], k: usize) -> Result<GramBase> {
    if base_a.is_empty() && base_b.is_empty() {
        return Err(Error::EmptyBase("both private bases are empty".into()));
    }
    let mut merged: BTreeMap<Gram, f64> = BTreeMap::new();
    for g in base_a.iter().chain(base_b) {
        *merged.entry(g.gram.clone()).or_insert(0.0) += g.noisy_frequency;
    }
    let mut scored: Vec<ScoredGram> = merged.into_iter().map(|(g, f)| ScoredGram::new(g, f)).collect();
    scored.sort_by(rank_order);
    scored.truncate(k);
    GramBase::from_scored(&scored)
}

fn check_dims(vectors: &[EmbeddedVector], k: usize) -> Result<()> {
    match vectors.iter().find(|v| v.dim() != k) {
        Some(v) => Err(Error::DimensionMismatch {
            left: k,
            right: v.dim(),
        }),
        None => Ok(()),
    }
}

/// Exhaustive scan: reports `(i, j)` iff `d'(a_i, b_j) <= th_i`.
pub fn match_vectors(
    vectors_a: &[EmbeddedVector],
    vectors_b: &[EmbeddedVector],
    thresholds: &ThresholdSet,
) -> Result<MatchResult> {
    if thresholds.len() != vectors_a.len() {
        return Err(Error::invalid(format!(
            "{} thresholds for {} vectors",
            thresholds.len(),
            vectors_a.len()
        )));
    }
    scan(vectors_a, vectors_b, |i| thresholds.values[i])
}

/// Same scan with one threshold for every record.
pub fn match_global(vectors_a: &[EmbeddedVector], vectors_b: &[EmbeddedVector], threshold: f64) -> Result<MatchResult> {
    scan(vectors_a, vectors_b, |_| threshold)
}

fn scan(
    vectors_a: &[EmbeddedVector],
    vectors_b: &[EmbeddedVector],
    threshold: impl Fn(usize) -> f64 + Sync,
) -> Result<MatchResult> {
    let k = match vectors_a.first().or(vectors_b.first()) {
        Some(v) => v.dim(),
        None => return Ok(MatchResult::default()),
    };
    check_dims(vectors_a, k)?;
    check_dims(vectors_b, k)?;
    let flat_b: Vec<f64> = vectors_b.iter().flat_map(|v| v.coordinates.iter().copied()).collect();
    let groups: Vec<Vec<MatchPair>> = vectors_a
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            let th = threshold(i);
            let mut found = Vec::new();
            if k == 0 {
                return found;
            }
            // Partial sums only grow, so a row can be dropped once it is
            // clearly past th^2; the margin covers rounding in sqrt.
            let cutoff = th * th * (1.0 + 1e-9) + f64::MIN_POSITIVE;
            for (j, row) in flat_b.chunks_exact(k).enumerate() {
                let mut sum = 0.0;
                for (x, y) in a.coordinates.iter().zip(row) {
                    sum += (x - y) * (x - y);
                    if sum > cutoff {
                        break;
                    }
                }
                if sum > cutoff {
                    continue;
                }
                let d = sum.sqrt();
                if d <= th {
                    found.push(MatchPair {
                        id_a: a.record_id,
                        id_b: vectors_b[j].record_id,
                        distance: d,
                    });
                }
            }
            found
        })
        .collect();
    Ok(MatchResult {
        pairs: groups.into_iter().flatten().collect(),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub mining_a: Duration,
    pub mining_b: Duration,
    pub merge: Duration,
    pub embed_a: Duration,
    pub embed_b: Duration,
    pub thresholds: Duration,
    pub matching: Duration,
}

impl StageTimings {
    /// Mining, merging, embedding and thresholding; everything but matching.
    pub fn preparation(&self) -> Duration {
        self.mining_a + self.mining_b + self.merge + self.embed_a + self.embed_b + self.thresholds
    }

    pub fn total(&self) -> Duration {
        self.preparation() + self.matching
    }
}

#[derive(Debug, Clone)]
pub struct ProtocolOutput {
    pub matches: MatchResult,
    pub transcript: Transcript,
    pub shared_base: GramBase,
    pub timings: StageTimings,
    /// Privacy actually spent by A and B.
    pub spent: [f64; 2],
    /// What each of A and B was allowed to spend.
    pub allotment: f64,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

/// Mining step run by A or B on its own data. Returns the DP-released
/// base and the privacy spent.
pub fn mine_party(dataset: &Dataset, config: &ProtocolConfig, role: Role) -> Result<(Vec<ScoredGram>, f64)> {
    let eps = config.party_epsilon();
    let mut budget = PrivacyBudget::new(eps)?;
    let mut sampler = LaplaceSampler::with_stream(config.seed, role.stream());
    let grams = match config.miner {
        MinerKind::Fpm => {
            let mc = MinerConfig {
                k: config.k,
                q_min: config.q_min,
                q_max: config.q_max,
                epsilon: eps,
                gamma: config.gamma,
                noise_factor: config.noise_factor,
            };
            fpm_mine(dataset, &mc, &mut budget, &mut sampler)?
        }
        MinerKind::Nonprivate => exact_top_k(dataset, config.q_min, config.q_max, config.k),
        MinerKind::Random => {
            if role != Role::A {
                Vec::new()
            } else {
                let base = random_base(config.k, config.q_min, config.q_max, &config.alphabet, sampler.rng())?;
                base.grams().iter().map(|g| ScoredGram::new(g.clone(), 1.0)).collect()
            }
        }
        kind => {
            let h_max = config
                .h_max
                .unwrap_or_else(|| (dataset.average_length().round() as usize).max(1));
            let tc = TreeConfig {
                epsilon: eps,
                h_max,
                theta: config.theta,
                strategy: kind.allocation().expect("tree miner"),
                q_min: config.q_min,
                q_max: config.q_max,
                k: config.k,
            };
            ptree_mine(dataset, &config.alphabet, &tc, &mut budget, &mut sampler)?.1
        }
    };
    Ok((grams, budget.spent()))
}

fn message(kind: MessageKind, from: Role, to: Role, payload: Vec<u8>) -> Message {
    Message {
        kind,
        from,
        to,
        payload,
    }
}

/// What C needs to run the matching phase, decoded from its inbox.
#[derive(Default)]
struct Inbox {
    base: Option<GramBase>,
    vectors_a: Option<Vec<EmbeddedVector>>,
    vectors_b_raw: Option<Vec<u8>>,
    vectors_a_raw: Option<Vec<u8>>,
    thresholds: Option<ThresholdSet>,
}

impl Inbox {
    fn accept(&mut self, msg: Message, ed: usize) -> Result<()> {
        match (msg.kind, msg.from) {
            (MessageKind::SharedBase, _) => self.base = Some(wire::decode_shared_base(&msg.payload)?),
            (MessageKind::VectorSet, Role::A) => self.vectors_a_raw = Some(msg.payload),
            (MessageKind::VectorSet, Role::B) => self.vectors_b_raw = Some(msg.payload),
            (MessageKind::ThresholdSet, Role::A) => self.thresholds = Some(wire::decode_thresholds(&msg.payload, ed)?),
            (kind, from) => return Err(Error::Wire(format!("C does not accept {kind} from {from:?}"))),
        }
        Ok(())
    }

    fn complete(&self) -> bool {
        self.base.is_some() && self.vectors_a_raw.is_some() && self.vectors_b_raw.is_some() && self.thresholds.is_some()
    }

    fn run_match(mut self) -> Result<MatchResult> {
        let k = self.base.as_ref().map_or(0, GramBase::len);
        let a = wire::decode_vectors(&self.vectors_a_raw.take().unwrap_or_default(), k)?;
        self.vectors_a = Some(a);
        let b = wire::decode_vectors(&self.vectors_b_raw.take().unwrap_or_default(), k)?;
        let th = self.thresholds.take().unwrap_or_default();
        match_vectors(self.vectors_a.as_deref().unwrap_or(&[]), &b, &th)
    }
}

fn other(role: Role) -> Role {
    if role == Role::A {
        Role::B
    } else {
        Role::A
    }
}

/// Runs the full protocol between `dataset_a` (A) and `dataset_b` (B).
pub fn run_protocol(dataset_a: &Dataset, dataset_b: &Dataset, config: &ProtocolConfig) -> Result<ProtocolOutput> {
    config.validate().map_err(|e| e.at_stage("config"))?;
    match config.schedule {
        Schedule::Sequential => run_sequential(dataset_a, dataset_b, config),
        Schedule::Threaded => run_threaded(dataset_a, dataset_b, config),
    }
}

fn run_sequential(dataset_a: &Dataset, dataset_b: &Dataset, config: &ProtocolConfig) -> Result<ProtocolOutput> {
    let mut transcript = Transcript::default();
    let mut timings = StageTimings::default();
    let mut send = |m: Message| {
        transcript.record(&m);
        m
    };

    let (mined_a, t) = timed(|| mine_party(dataset_a, config, Role::A));
    let (base_a, spent_a) = mined_a.map_err(|e| e.at_stage("mining A"))?;
    timings.mining_a = t;
    let (mined_b, t) = timed(|| mine_party(dataset_b, config, Role::B));
    let (base_b, spent_b) = mined_b.map_err(|e| e.at_stage("mining B"))?;
    timings.mining_b = t;

    let merger = config.merger;
    let (own, theirs) = if merger == Role::A {
        (&base_a, &base_b)
    } else {
        (&base_b, &base_a)
    };
    let msg = send(message(
        MessageKind::PrivateBase,
        other(merger),
        merger,
        wire::encode_private_base(theirs),
    ));
    let received = wire::decode_private_base(&msg.payload)?;
    let (shared, t) = timed(|| {
        if merger == Role::A {
            merge_bases(own, &received, config.k)
        } else {
            merge_bases(&received, own, config.k)
        }
    });
    let shared = shared.map_err(|e| e.at_stage("base generation"))?;
    timings.merge = t;
    let shared_bytes = wire::encode_shared_base(&shared);
    send(message(
        MessageKind::SharedBase,
        merger,
        other(merger),
        shared_bytes.clone(),
    ));
    let to_c = send(message(MessageKind::SharedBase, merger, Role::C, shared_bytes));

    let mut inbox = Inbox::default();
    inbox.accept(to_c, config.ed).map_err(|e| e.at_stage("matching"))?;

    let (va, t) = timed(|| embed_dataset(dataset_a, &shared));
    timings.embed_a = t;
    let (vb, t) = timed(|| embed_dataset(dataset_b, &shared));
    timings.embed_b = t;
    let (th, t) = timed(|| thresholds_for_dataset(dataset_a, &shared, config.ed));
    timings.thresholds = t;

    for m in [
        message(MessageKind::VectorSet, Role::A, Role::C, wire::encode_vectors(&va)),
        message(MessageKind::VectorSet, Role::B, Role::C, wire::encode_vectors(&vb)),
        message(
            MessageKind::ThresholdSet,
            Role::A,
            Role::C,
            wire::encode_thresholds(&th),
        ),
    ] {
        let m = send(m);
        inbox.accept(m, config.ed).map_err(|e| e.at_stage("matching"))?;
    }

    let (matches, t) = timed(|| inbox.run_match());
    let matches = matches.map_err(|e| e.at_stage("matching"))?;
    timings.matching = t;
    send(message(
        MessageKind::MatchReport,
        Role::C,
        Role::Driver,
        wire::encode_matches(&matches),
    ));

    Ok(ProtocolOutput {
        matches,
        transcript,
        shared_base: shared,
        timings,
        spent: [spent_a, spent_b],
        allotment: config.party_epsilon(),
    })
}

type Outbox = Sender<Message>;

struct Network {
    transcript: Arc<Mutex<Transcript>>,
    routes: BTreeMap<Role, Outbox>,
}

impl Network {
    fn send(&self, m: Message) -> Result<()> {
        self.transcript.lock().expect("transcript lock").record(&m);
        let to = m.to;
        self.routes[&to]
            .send(m)
            .map_err(|_| Error::Wire(format!("party {to:?} hung up")))
    }

    /// Wakes every other party with an out-of-band stop; not part of the
    /// transcript.
    fn abort(&self, from: Role) {
        for (role, tx) in &self.routes {
            if *role != from && *role != Role::Driver {
                let _ = tx.send(message(MessageKind::MatchReport, Role::Driver, *role, Vec::new()));
            }
        }
    }
}

fn recv(rx: &Receiver<Message>, kind: MessageKind) -> Result<Message> {
    let m = rx
        .recv()
        .map_err(|_| Error::Wire(format!("channel closed while waiting for {kind}")))?;
    if m.from == Role::Driver {
        return Err(Error::Wire(ABORTED.into()));
    }
    if m.kind != kind {
        return Err(Error::Wire(format!("expected {kind}, got {}", m.kind)));
    }
    Ok(m)
}

struct DataPartyOutcome {
    spent: f64,
    mining: Duration,
    merge: Duration,
    embed: Duration,
    thresholds: Duration,
    shared: GramBase,
}

fn data_party(
    role: Role,
    dataset: &Dataset,
    config: &ProtocolConfig,
    net: &Network,
    rx: &Receiver<Message>,
) -> Result<DataPartyOutcome> {
    let stage = |s_a: &'static str, s_b: &'static str| if role == Role::A { s_a } else { s_b };
    let (mined, mining) = timed(|| mine_party(dataset, config, role));
    let (own, spent) = mined.map_err(|e| e.at_stage(stage("mining A", "mining B")))?;

    let mut merge = Duration::ZERO;
    let shared = if config.merger == role {
        let theirs = wire::decode_private_base(&recv(rx, MessageKind::PrivateBase)?.payload)?;
        let (shared, t) = timed(|| {
            if role == Role::A {
                merge_bases(&own, &theirs, config.k)
            } else {
                merge_bases(&theirs, &own, config.k)
            }
        });
        merge = t;
        let shared = shared.map_err(|e| e.at_stage("base generation"))?;
        let bytes = wire::encode_shared_base(&shared);
        net.send(message(MessageKind::SharedBase, role, other(role), bytes.clone()))?;
        net.send(message(MessageKind::SharedBase, role, Role::C, bytes))?;
        shared
    } else {
        net.send(message(
            MessageKind::PrivateBase,
            role,
            config.merger,
            wire::encode_private_base(&own),
        ))?;
        wire::decode_shared_base(&recv(rx, MessageKind::SharedBase)?.payload)
            .map_err(|e| e.at_stage("base generation"))?
    };

    let (vectors, embed) = timed(|| embed_dataset(dataset, &shared));
    net.send(message(
        MessageKind::VectorSet,
        role,
        Role::C,
        wire::encode_vectors(&vectors),
    ))?;

    let mut thresholds = Duration::ZERO;
    if role == Role::A {
        let (th, t) = timed(|| thresholds_for_dataset(dataset, &shared, config.ed));
        thresholds = t;
        net.send(message(
            MessageKind::ThresholdSet,
            role,
            Role::C,
            wire::encode_thresholds(&th),
        ))?;
    }
    Ok(DataPartyOutcome {
        spent,
        mining,
        merge,
        embed,
        thresholds,
        shared,
    })
}

const ABORTED: &str = "a peer party aborted";

fn is_abort(e: &Error) -> bool {
    matches!(e, Error::Wire(m) if m == ABORTED)
}

fn run_threaded(dataset_a: &Dataset, dataset_b: &Dataset, config: &ProtocolConfig) -> Result<ProtocolOutput> {
    let (tx_a, rx_a) = mpsc::channel();
    let (tx_b, rx_b) = mpsc::channel();
    let (tx_c, rx_c) = mpsc::channel();
    let (tx_d, rx_d) = mpsc::channel();
    let routes: BTreeMap<Role, Outbox> =
        [(Role::A, tx_a), (Role::B, tx_b), (Role::C, tx_c), (Role::Driver, tx_d)].into();
    let transcript = Arc::new(Mutex::new(Transcript::default()));
    let net = Network {
        transcript: Arc::clone(&transcript),
        routes,
    };

    let (out_a, out_b, out_c) = thread::scope(|s| {
        let net = &net;
        let party = |role: Role, dataset: &'_ Dataset, rx: Receiver<Message>| {
            let out = data_party(role, dataset, config, net, &rx);
            if out.is_err() {
                net.abort(role);
            }
            out
        };
        let a = s.spawn(move || party(Role::A, dataset_a, rx_a));
        let b = s.spawn(move || party(Role::B, dataset_b, rx_b));
        let c = s.spawn(move || -> Result<Duration> {
            let mut inbox = Inbox::default();
            while !inbox.complete() {
                let m = rx_c.recv().map_err(|_| Error::Wire(ABORTED.into()))?;
                if m.from == Role::Driver {
                    return Err(Error::Wire(ABORTED.into()));
                }
                inbox.accept(m, config.ed)?;
            }
            let (matches, t) = timed(|| inbox.run_match());
            let matches = matches?;
            net.send(message(
                MessageKind::MatchReport,
                Role::C,
                Role::Driver,
                wire::encode_matches(&matches),
            ))?;
            Ok(t)
        });
        (
            a.join().expect("party A panicked"),
            b.join().expect("party B panicked"),
            c.join().expect("party C panicked"),
        )
    });

    // Report the failure that caused the others to stop.
    let out_c = out_c.map_err(|e| if is_abort(&e) { e } else { e.at_stage("matching") });
    let (out_a, out_b, matching) = match (out_a, out_b, out_c) {
        (Ok(a), Ok(b), Ok(c)) => (a, b, c),
        (a, b, c) => {
            let mut errors: Vec<Error> = [a.err(), b.err(), c.err()].into_iter().flatten().collect();
            let pick = errors.iter().position(|e| !is_abort(e)).unwrap_or(0);
            return Err(errors.swap_remove(pick));
        }
    };
    let report = rx_d.recv().map_err(|_| Error::Wire("no match report".into()))?;
    let matches = wire::decode_matches(&report.payload)?;
    let transcript = transcript.lock().expect("transcript lock").clone();
    let shared = if config.merger == Role::A {
        out_a.shared
    } else {
        out_b.shared
    };
    Ok(ProtocolOutput {
        matches,
        transcript,
        shared_base: shared,
        timings: StageTimings {
            mining_a: out_a.mining,
            mining_b: out_b.mining,
            merge: out_a.merge + out_b.merge,
            embed_a: out_a.embed,
            embed_b: out_b.embed,
            thresholds: out_a.thresholds,
            matching,
        },
        spent: [out_a.spent, out_b.spent],
        allotment: config.party_epsilon(),
    })
}
