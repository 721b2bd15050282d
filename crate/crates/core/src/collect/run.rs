//! Collection plans and the run engine.
//!
//! A plan names providers and tasks (pull, crawl, poll, subscribe); the
//! engine replays them over a single-threaded event loop. Under the virtual
//! clock, event times are simulated seconds and the whole run is a pure
//! function of (plan, scripts, seed); under the real clock the loop sleeps
//! until each event is due and fetches over HTTP.

use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetCollection, Durability, DEFAULT_SHARD_LIMIT};
use crate::doc::{AvailabilityStatus, Document, ProvenanceStamp, UnavailableReason};
use crate::value::{DocValue, Timestamp};
use crate::{Error, Result};

use super::cost::{cost_of_request, CostLedger, CostParams, CostTotals};
use super::http::HttpSource;
use super::poll::{adapt_poll_interval, PollSchedule};
use super::rate::{RateDecision, RateLimiter};
use super::sim::{FetchOutcome, ProviderSource, SimulatedProvider};
use super::stream::{FlushOutcome, FlushPolicy, FlushTrigger, StreamItem, Subscription, SubscriptionEnd};
use super::{ProviderDescriptor, ProviderKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    #[default]
    Virtual,
    Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DurabilityMode {
    #[default]
    PerDocument,
    Batched,
}

impl DurabilityMode {
    fn to_durability(self) -> Durability {
        match self {
            DurabilityMode::PerDocument => Durability::PerDocument,
            DurabilityMode::Batched => Durability::Batched,
        }
    }
}

fn default_max_depth() -> u32 {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TaskSpec {
    /// Issue each request once, in order, against an on-demand provider.
    Pull {
        provider: String,
        dataset: String,
        requests: Vec<String>,
    },
    /// Breadth-first link-following crawl of a site provider, same hosts as
    /// the seeds only.
    Crawl {
        provider: String,
        dataset: String,
        start_urls: Vec<String>,
        #[serde(default = "default_max_depth")]
        max_depth: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_pages: Option<u32>,
    },
    /// Repeatedly issue one request with an interval tuned by novelty.
    Poll {
        provider: String,
        dataset: String,
        request: String,
        schedule: PollSchedule,
        polls: u32,
    },
    /// Subscribe to a stream provider and ingest flushed batches.
    Subscribe {
        provider: String,
        dataset: String,
        /// Seconds between produced items.
        production_period: f64,
        end: SubscriptionEnd,
        flush: FlushPolicy,
    },
}

impl TaskSpec {
    pub fn provider(&self) -> &str {
        match self {
            TaskSpec::Pull { provider, .. }
            | TaskSpec::Crawl { provider, .. }
            | TaskSpec::Poll { provider, .. }
            | TaskSpec::Subscribe { provider, .. } => provider,
        }
    }

    pub fn dataset(&self) -> &str {
        match self {
            TaskSpec::Pull { dataset, .. }
            | TaskSpec::Crawl { dataset, .. }
            | TaskSpec::Poll { dataset, .. }
            | TaskSpec::Subscribe { dataset, .. } => dataset,
        }
    }

    fn required_kind(&self) -> ProviderKind {
        match self {
            TaskSpec::Pull { .. } | TaskSpec::Poll { .. } => ProviderKind::OnDemand,
            TaskSpec::Crawl { .. } => ProviderKind::Site,
            TaskSpec::Subscribe { .. } => ProviderKind::Stream,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionPlan {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub clock: ClockMode,
    /// Start of the virtual timeline; required under the virtual clock.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub virtual_start: Option<Timestamp>,
    /// Seconds after start at which open-ended subscriptions are closed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default = "CostParams::default")]
    pub cost: CostParams,
    #[serde(default)]
    pub durability: DurabilityMode,
    pub providers: Vec<ProviderDescriptor>,
    pub tasks: Vec<TaskSpec>,
}

impl CollectionPlan {
    pub fn load(path: impl AsRef<Path>) -> Result<CollectionPlan> {
        let raw = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            Error::Plan(format!("cannot read plan {}: {e}", path.as_ref().display()))
        })?;
        let plan: CollectionPlan =
            serde_json::from_str(&raw).map_err(|e| Error::Plan(format!("bad plan: {e}")))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::Plan("plan name must be non-empty".into()));
        }
        let mut by_id = HashMap::new();
        for (i, p) in self.providers.iter().enumerate() {
            p.validate()?;
            if by_id.insert(p.id.clone(), i).is_some() {
                return Err(Error::Plan(format!("duplicate provider id {}", p.id)));
            }
        }
        if self.clock == ClockMode::Virtual && self.virtual_start.is_none() {
            return Err(Error::Plan(
                "virtual clock requires virtual_start in the plan".into(),
            ));
        }
        if let Some(h) = self.horizon {
            if !(h >= 0.0) {
                return Err(Error::Plan("horizon must be non-negative".into()));
            }
        }
        for task in &self.tasks {
            let Some(&pidx) = by_id.get(task.provider()) else {
                return Err(Error::UnknownProvider(task.provider().to_string()));
            };
            let provider = &self.providers[pidx];
            let need = task.required_kind();
            if provider.kind != need {
                return Err(Error::KindMismatch {
                    provider: provider.id.clone(),
                    expected: need.label().to_string(),
                    actual: provider.kind.label().to_string(),
                });
            }
            if task.dataset().is_empty() {
                return Err(Error::Plan("task dataset name must be non-empty".into()));
            }
            match task {
                TaskSpec::Poll { schedule, polls, .. } => {
                    schedule.validate()?;
                    if *polls == 0 {
                        return Err(Error::Plan("poll task needs polls >= 1".into()));
                    }
                }
                TaskSpec::Subscribe {
                    production_period,
                    end,
                    flush,
                    ..
                } => {
                    flush.validate()?;
                    if !(*production_period > 0.0) {
                        return Err(Error::Plan("production_period must be positive".into()));
                    }
                    match end {
                        SubscriptionEnd::Duration(d) if !(*d >= 0.0) => {
                            return Err(Error::Plan("subscription duration must be non-negative".into()));
                        }
                        SubscriptionEnd::Unsubscribe if self.horizon.is_none() => {
                            return Err(Error::Plan(
                                "open-ended subscription requires a plan horizon".into(),
                            ));
                        }
                        _ => {}
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ProviderReport {
    pub requests: u64,
    pub documents_new: u64,
    pub documents_duplicate: u64,
    pub empty: u64,
    /// Reason label → count of blocked interactions.
    pub unavailable: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub documents: u64,
    pub duplicates: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub plan: String,
    pub seed: u64,
    pub started_at: Timestamp,
    /// Seconds from start to the last processed event.
    pub elapsed: f64,
    pub providers: BTreeMap<String, ProviderReport>,
    pub datasets: BTreeMap<String, DatasetSummary>,
    /// Polls that fetched nothing, leaving novelty undefined and the
    /// schedule untouched.
    pub flagged_polls: u64,
    pub cost: CostTotals,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub ledger: CostLedger,
}

/// Execute a validated plan. Simulation scripts are resolved relative to
/// `plan_dir`; datasets land in `out_root/<dataset name>`.
pub fn run_collection(
    plan: &CollectionPlan,
    plan_dir: &Path,
    out_root: &Path,
) -> Result<RunOutcome> {
    plan.validate()?;
    Engine::build(plan, plan_dir, out_root)?.run()
}

#[derive(Debug)]
enum EventKind {
    Pull { task: usize, index: usize },
    Crawl { task: usize },
    Poll { task: usize, remaining: u32 },
    StreamDeliver { task: usize, index: u64 },
    StreamTimer { task: usize, epoch: u64 },
    StreamEnd { task: usize },
}

#[derive(Debug)]
struct Event {
    at: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.at.total_cmp(&other.at).is_eq() && self.seq == other.seq
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    // Reversed so the max-heap pops the earliest (then lowest-seq) event.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .at
            .total_cmp(&self.at)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct CrawlState {
    frontier: VecDeque<(String, u32)>,
    seen: HashSet<String>,
    hosts: HashSet<String>,
    fetched_pages: u32,
}

struct StreamState {
    sub: Subscription,
    end_time: f64,
    pending: Option<(u64, DocValue)>,
    end_scheduled: bool,
    done: bool,
}

enum TaskState {
    Pull,
    Crawl(CrawlState),
    Poll(PollSchedule),
    Stream(StreamState),
}

#[derive(Default, Clone)]
struct ProvAccum {
    requests: u64,
    documents_new: u64,
    documents_duplicate: u64,
    empty: u64,
    unavailable: BTreeMap<String, u64>,
}

enum Perform {
    /// Quota full; retry the same event at this absolute time.
    Retry(f64),
    Done {
        completion: f64,
        links: Vec<String>,
        fetched: u64,
        new_unique: u64,
        /// Transport-level failure: the task chain stops here.
        abort: bool,
    },
}

struct Engine<'p> {
    plan: &'p CollectionPlan,
    sources: Vec<Box<dyn ProviderSource>>,
    limiters: Vec<RateLimiter>,
    req_seq: Vec<u64>,
    datasets: Vec<DatasetCollection>,
    task_dataset: Vec<usize>,
    task_provider: Vec<usize>,
    states: Vec<TaskState>,
    heap: BinaryHeap<Event>,
    seq: u64,
    ledger: CostLedger,
    accum: Vec<ProvAccum>,
    active_subs: HashMap<usize, usize>,
    flagged_polls: u64,
    t0: f64,
    now_max: f64,
}

fn unix_now() -> f64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl<'p> Engine<'p> {
    fn build(plan: &'p CollectionPlan, plan_dir: &Path, out_root: &Path) -> Result<Engine<'p>> {
        let mut sources: Vec<Box<dyn ProviderSource>> = Vec::with_capacity(plan.providers.len());
        let mut limiters = Vec::with_capacity(plan.providers.len());
        for p in &plan.providers {
            let source: Box<dyn ProviderSource> = if p.uses_real_http() {
                Box::new(HttpSource::new(&p.endpoint, p.credentials.as_ref())?)
            } else {
                Box::new(SimulatedProvider::from_script_file(
                    plan_dir.join(&p.endpoint),
                    plan.seed,
                    &p.id,
                )?)
            };
            sources.push(source);
            limiters.push(RateLimiter::new(p.sla.clone()));
        }

        let provider_idx: HashMap<&str, usize> = plan
            .providers
            .iter()
            .enumerate()
            .map(|(i, p)| (p.id.as_str(), i))
            .collect();

        let mut datasets: Vec<DatasetCollection> = Vec::new();
        let mut dataset_idx: HashMap<String, usize> = HashMap::new();
        let mut task_dataset = Vec::with_capacity(plan.tasks.len());
        let mut task_provider = Vec::with_capacity(plan.tasks.len());
        let durability = plan.durability.to_durability();
        for task in &plan.tasks {
            let name = task.dataset();
            let idx = match dataset_idx.get(name) {
                Some(&i) => i,
                None => {
                    let dir = out_root.join(name);
                    let ds = if dir.join("manifest.json").exists() {
                        DatasetCollection::open_with(&dir, durability)?
                    } else {
                        DatasetCollection::create_with(&dir, name, DEFAULT_SHARD_LIMIT, durability)?
                    };
                    datasets.push(ds);
                    dataset_idx.insert(name.to_string(), datasets.len() - 1);
                    datasets.len() - 1
                }
            };
            task_dataset.push(idx);
            task_provider.push(provider_idx[task.provider()]);
        }

        let t0 = match plan.clock {
            ClockMode::Virtual => plan
                .virtual_start
                .expect("validated: virtual clock has a start")
                .unix() as f64,
            ClockMode::Real => unix_now(),
        };

        Ok(Engine {
            plan,
            sources,
            limiters,
            req_seq: vec![0; plan.providers.len()],
            datasets,
            task_dataset,
            task_provider,
            states: Vec::new(),
            heap: BinaryHeap::new(),
            seq: 0,
            ledger: CostLedger::default(),
            accum: vec![ProvAccum::default(); plan.providers.len()],
            active_subs: HashMap::new(),
            flagged_polls: 0,
            t0,
            now_max: t0,
        })
    }

    fn push(&mut self, at: f64, kind: EventKind) {
        let seq = self.seq;
        self.seq += 1;
        self.heap.push(Event { at, seq, kind });
    }

    fn run(mut self) -> Result<RunOutcome> {
        self.schedule_initial()?;
        while let Some(event) = self.heap.pop() {
            if self.plan.clock == ClockMode::Real {
                let wall = unix_now();
                if event.at > wall {
                    std::thread::sleep(std::time::Duration::from_secs_f64(event.at - wall));
                }
            }
            let now = event.at;
            if now > self.now_max {
                self.now_max = now;
            }
            match event.kind {
                EventKind::Pull { task, index } => self.on_pull(task, index, now)?,
                EventKind::Crawl { task } => self.on_crawl(task, now)?,
                EventKind::Poll { task, remaining } => self.on_poll(task, remaining, now)?,
                EventKind::StreamDeliver { task, index } => self.on_deliver(task, index, now)?,
                EventKind::StreamTimer { task, epoch } => self.on_timer(task, epoch, now)?,
                EventKind::StreamEnd { task } => self.on_stream_end(task, now)?,
            }
        }
        for ds in &mut self.datasets {
            ds.sync()?;
        }

        let mut providers = BTreeMap::new();
        for (i, p) in self.plan.providers.iter().enumerate() {
            let a = &self.accum[i];
            providers.insert(
                p.id.clone(),
                ProviderReport {
                    requests: a.requests,
                    documents_new: a.documents_new,
                    documents_duplicate: a.documents_duplicate,
                    empty: a.empty,
                    unavailable: a.unavailable.clone(),
                },
            );
        }
        let mut ds_reports = BTreeMap::new();
        for ds in &self.datasets {
            ds_reports.insert(
                ds.name().to_string(),
                DatasetSummary {
                    documents: ds.len(),
                    duplicates: ds.duplicates(),
                },
            );
        }
        let report = RunReport {
            plan: self.plan.name.clone(),
            seed: self.plan.seed,
            started_at: Timestamp::from_unix(self.t0.floor() as i64),
            elapsed: self.now_max - self.t0,
            providers,
            datasets: ds_reports,
            flagged_polls: self.flagged_polls,
            cost: self.ledger.totals(),
        };
        Ok(RunOutcome {
            report,
            ledger: self.ledger,
        })
    }

    fn schedule_initial(&mut self) -> Result<()> {
        for (t, task) in self.plan.tasks.iter().enumerate() {
            let state = match task {
                TaskSpec::Pull { requests, .. } => {
                    if !requests.is_empty() {
                        self.push(self.t0, EventKind::Pull { task: t, index: 0 });
                    }
                    TaskState::Pull
                }
                TaskSpec::Crawl {
                    start_urls,
                    max_depth: _,
                    ..
                } => {
                    let mut hosts = HashSet::new();
                    let mut frontier = VecDeque::new();
                    let mut seen = HashSet::new();
                    for u in start_urls {
                        let parsed = url::Url::parse(u)
                            .map_err(|e| Error::Plan(format!("bad start url {u}: {e}")))?;
                        let Some(host) = parsed.host_str() else {
                            return Err(Error::Plan(format!("start url {u} has no host")));
                        };
                        hosts.insert(host.to_string());
                        if seen.insert(u.clone()) {
                            frontier.push_back((u.clone(), 0));
                        }
                    }
                    if !frontier.is_empty() {
                        self.push(self.t0, EventKind::Crawl { task: t });
                    }
                    TaskState::Crawl(CrawlState {
                        frontier,
                        seen,
                        hosts,
                        fetched_pages: 0,
                    })
                }
                TaskSpec::Poll { schedule, polls, .. } => {
                    self.push(
                        self.t0,
                        EventKind::Poll {
                            task: t,
                            remaining: *polls,
                        },
                    );
                    TaskState::Poll(*schedule)
                }
                TaskSpec::Subscribe {
                    provider,
                    production_period,
                    end,
                    flush,
                    ..
                } => {
                    let pidx = self.task_provider[t];
                    if let Some(&other) = self.active_subs.get(&pidx) {
                        let _ = other;
                        return Err(Error::DuplicateSubscription(provider.clone()));
                    }
                    self.active_subs.insert(pidx, t);
                    let jitter = self.sources[pidx].max_stream_jitter();
                    if jitter >= *production_period {
                        return Err(Error::Plan(format!(
                            "provider {provider}: stream jitter {jitter} must stay below the production period {production_period}"
                        )));
                    }
                    let sub = Subscription::new(
                        provider.clone(),
                        *production_period,
                        self.t0,
                        *end,
                        *flush,
                    )?;
                    let end_time = sub.end_time().unwrap_or_else(|| {
                        self.t0 + self.plan.horizon.expect("validated: horizon set")
                    });
                    if let Some(max_elapsed) = flush.max_elapsed {
                        self.push(
                            self.t0 + max_elapsed,
                            EventKind::StreamTimer { task: t, epoch: 0 },
                        );
                    }
                    self.states.push(TaskState::Stream(StreamState {
                        sub,
                        end_time,
                        pending: None,
                        end_scheduled: false,
                        done: false,
                    }));
                    self.schedule_stream_next(t, 0)?;
                    continue;
                }
            };
            self.states.push(state);
        }
        Ok(())
    }

    fn stamp(&self, pidx: usize, availability: AvailabilityStatus, at: f64) -> ProvenanceStamp {
        let p = &self.plan.providers[pidx];
        ProvenanceStamp {
            availability,
            collected_at: Timestamp::from_unix(at.floor() as i64),
            jurisdiction: p.jurisdiction.clone(),
            provider_id: p.id.clone(),
        }
    }

    fn marker_body(request: &str) -> DocValue {
        DocValue::record([("request".to_string(), DocValue::text(request))])
    }

    fn next_request_id(&mut self, pidx: usize) -> String {
        let n = self.req_seq[pidx];
        self.req_seq[pidx] += 1;
        format!("{}#{n}", self.plan.providers[pidx].id)
    }

    fn bill(&mut self, pidx: usize, bytes_in: u64, bytes_out: u64) -> (f64, f64) {
        let id = self.next_request_id(pidx);
        let p = &self.plan.providers[pidx];
        let record = cost_of_request(&p.network, p, &self.plan.cost, id, bytes_in, bytes_out);
        let times = (record.execution_time, record.transfer_time);
        self.ledger.push(record);
        times
    }

    /// One rate-limited request against an on-demand or site provider,
    /// results ingested and billed.
    fn perform(&mut self, task: usize, request: &str, now: f64) -> Result<Perform> {
        let pidx = self.task_provider[task];
        match self.limiters[pidx].check(now) {
            RateDecision::Deny { retry_after } => return Ok(Perform::Retry(now + retry_after)),
            RateDecision::Allow => self.limiters[pidx].record(now),
        }
        self.accum[pidx].requests += 1;

        let p = &self.plan.providers[pidx];
        let auth_blocked = p.sla.auth_required && p.credentials.is_none();
        let (outcome, abort) = if auth_blocked {
            (FetchOutcome::Unavailable(UnavailableReason::Auth), false)
        } else {
            match self.sources[pidx].fetch(request) {
                Ok(outcome) => (outcome, false),
                Err(e) => {
                    tracing::warn!(provider = %p.id, request, error = %e, "fetch failed, aborting task");
                    (FetchOutcome::Unavailable(UnavailableReason::ProviderError), true)
                }
            }
        };

        let bytes_in = request.len() as u64;
        let bytes_out = match &outcome {
            FetchOutcome::Documents { docs, links } => {
                docs.iter()
                    .map(|d| d.canonical_bytes().len() as u64)
                    .sum::<u64>()
                    + links.iter().map(|l| l.len() as u64).sum::<u64>()
            }
            _ => 0,
        };
        let (exec, transfer) = self.bill(pidx, bytes_in, bytes_out);
        let completion = now + exec + transfer;

        let dsidx = self.task_dataset[task];
        let mut fetched = 0u64;
        let mut new_unique = 0u64;
        let mut links_out = Vec::new();
        match outcome {
            FetchOutcome::Documents { docs, links } => {
                fetched = docs.len() as u64;
                for body in docs {
                    let stamp = self.stamp(pidx, AvailabilityStatus::Collected, completion);
                    let doc = Document::new(body, stamp)?;
                    let ingest = self.datasets[dsidx].ingest_document(doc)?;
                    if ingest.duplicate {
                        self.accum[pidx].documents_duplicate += 1;
                    } else {
                        self.accum[pidx].documents_new += 1;
                        new_unique += 1;
                    }
                }
                links_out = links;
            }
            FetchOutcome::Empty => {
                self.accum[pidx].empty += 1;
                let stamp = self.stamp(pidx, AvailabilityStatus::Empty, completion);
                let doc = Document::new(Self::marker_body(request), stamp)?;
                self.datasets[dsidx].ingest_document(doc)?;
            }
            FetchOutcome::Unavailable(reason) => {
                *self.accum[pidx]
                    .unavailable
                    .entry(reason.label().to_string())
                    .or_insert(0) += 1;
                let stamp = self.stamp(pidx, AvailabilityStatus::Unavailable(reason), completion);
                let doc = Document::new(Self::marker_body(request), stamp)?;
                self.datasets[dsidx].ingest_document(doc)?;
            }
        }
        Ok(Perform::Done {
            completion,
            links: links_out,
            fetched,
            new_unique,
            abort,
        })
    }

    fn on_pull(&mut self, task: usize, index: usize, now: f64) -> Result<()> {
        let TaskSpec::Pull { requests, .. } = &self.plan.tasks[task] else {
            unreachable!("pull event on non-pull task");
        };
        let request = requests[index].clone();
        match self.perform(task, &request, now)? {
            Perform::Retry(at) => self.push(at, EventKind::Pull { task, index }),
            Perform::Done {
                completion, abort, ..
            } => {
                if !abort && index + 1 < requests_len(&self.plan.tasks[task]) {
                    self.push(
                        completion,
                        EventKind::Pull {
                            task,
                            index: index + 1,
                        },
                    );
                }
            }
        }
        Ok(())
    }

    fn on_crawl(&mut self, task: usize, now: f64) -> Result<()> {
        let TaskSpec::Crawl {
            max_depth,
            max_pages,
            ..
        } = &self.plan.tasks[task]
        else {
            unreachable!("crawl event on non-crawl task");
        };
        let (max_depth, max_pages) = (*max_depth, *max_pages);

        let TaskState::Crawl(state) = &mut self.states[task] else {
            unreachable!();
        };
        if max_pages.is_some_and(|m| state.fetched_pages >= m) {
            return Ok(());
        }
        let Some((url, depth)) = state.frontier.pop_front() else {
            return Ok(());
        };

        match self.perform(task, &url, now)? {
            Perform::Retry(at) => {
                let TaskState::Crawl(state) = &mut self.states[task] else {
                    unreachable!();
                };
                state.frontier.push_front((url, depth));
                self.push(at, EventKind::Crawl { task });
            }
            Perform::Done {
                completion,
                links,
                abort,
                ..
            } => {
                let TaskState::Crawl(state) = &mut self.states[task] else {
                    unreachable!();
                };
                state.fetched_pages += 1;
                if abort {
                    return Ok(());
                }
                if depth < max_depth {
                    for link in links {
                        let Ok(parsed) = url::Url::parse(&link) else {
                            tracing::debug!(link, "skipping unparseable link");
                            continue;
                        };
                        let same_host = parsed
                            .host_str()
                            .is_some_and(|h| state.hosts.contains(h));
                        if same_host && state.seen.insert(link.clone()) {
                            state.frontier.push_back((link, depth + 1));
                        }
                    }
                }
                let more = !state.frontier.is_empty()
                    && max_pages.is_none_or(|m| state.fetched_pages < m);
                if more {
                    self.push(completion, EventKind::Crawl { task });
                }
            }
        }
        Ok(())
    }

    fn on_poll(&mut self, task: usize, remaining: u32, now: f64) -> Result<()> {
        let TaskSpec::Poll { request, .. } = &self.plan.tasks[task] else {
            unreachable!("poll event on non-poll task");
        };
        let request = request.clone();
        match self.perform(task, &request, now)? {
            Perform::Retry(at) => self.push(at, EventKind::Poll { task, remaining }),
            Perform::Done {
                completion,
                fetched,
                new_unique,
                abort,
                ..
            } => {
                let TaskState::Poll(schedule) = &mut self.states[task] else {
                    unreachable!();
                };
                if fetched == 0 {
                    self.flagged_polls += 1;
                } else {
                    let ratio = new_unique as f64 / fetched as f64;
                    *schedule = adapt_poll_interval(schedule, ratio)?;
                }
                let interval = schedule.interval;
                if remaining > 1 && !abort {
                    self.push(
                        completion + interval,
                        EventKind::Poll {
                            task,
                            remaining: remaining - 1,
                        },
                    );
                }
            }
        }
        Ok(())
    }

    /// Look up the next stream item and schedule its delivery, or the
    /// subscription's end once the script dries up or the end time passes.
    fn schedule_stream_next(&mut self, task: usize, index: u64) -> Result<()> {
        let pidx = self.task_provider[task];
        let item = self.sources[pidx].stream_item(index)?;
        let TaskState::Stream(state) = &mut self.states[task] else {
            unreachable!();
        };
        let period = state.sub.production_period;
        let started = state.sub.started_at;
        let deliver_at = item
            .as_ref()
            .map(|(_, jitter)| started + (index as f64 + 1.0) * period + jitter);
        match (item, deliver_at) {
            (Some((body, _)), Some(at)) if at <= state.end_time => {
                state.pending = Some((index, body));
                self.push(at, EventKind::StreamDeliver { task, index });
            }
            _ => {
                if !state.end_scheduled {
                    state.end_scheduled = true;
                    let at = state.end_time;
                    self.push(at, EventKind::StreamEnd { task });
                }
            }
        }
        Ok(())
    }

    fn on_deliver(&mut self, task: usize, index: u64, now: f64) -> Result<()> {
        let TaskState::Stream(state) = &mut self.states[task] else {
            unreachable!();
        };
        if state.done {
            return Ok(());
        }
        let (pending_index, body) = state
            .pending
            .take()
            .expect("delivery event with no pending item");
        debug_assert_eq!(pending_index, index);
        let outcome = state
            .sub
            .flush_decision(Some(StreamItem { body, at: now }), now)?;
        self.handle_flush(task, outcome, now)?;
        self.schedule_stream_next(task, index + 1)
    }

    fn on_timer(&mut self, task: usize, epoch: u64, now: f64) -> Result<()> {
        let TaskState::Stream(state) = &mut self.states[task] else {
            unreachable!();
        };
        if state.done || state.sub.is_ended() || state.sub.flush_epoch() != epoch {
            return Ok(());
        }
        let outcome = state.sub.flush_decision(None, now)?;
        self.handle_flush(task, outcome, now)
    }

    fn on_stream_end(&mut self, task: usize, now: f64) -> Result<()> {
        let pidx = self.task_provider[task];
        let TaskState::Stream(state) = &mut self.states[task] else {
            unreachable!();
        };
        if state.done {
            return Ok(());
        }
        state.done = true;
        let delivered = state.sub.delivered();
        let residual = state.sub.unsubscribe(now)?;
        if let Some(batch) = residual {
            self.ingest_batch(task, batch, FlushTrigger::Final)?;
        }
        if delivered == 0 {
            // The subscription as a whole yielded nothing; store the Empty
            // marker so reports can say so.
            let provider = self.plan.providers[pidx].id.clone();
            let request = format!("subscribe:{provider}");
            self.accum[pidx].empty += 1;
            let stamp = self.stamp(pidx, AvailabilityStatus::Empty, now);
            let doc = Document::new(Self::marker_body(&request), stamp)?;
            let dsidx = self.task_dataset[task];
            self.datasets[dsidx].ingest_document(doc)?;
        }
        self.active_subs.remove(&pidx);
        Ok(())
    }

    fn handle_flush(&mut self, task: usize, outcome: FlushOutcome, now: f64) -> Result<()> {
        match outcome {
            FlushOutcome::Hold => Ok(()),
            FlushOutcome::Flush { batch, trigger } => {
                self.ingest_batch(task, batch, trigger)?;
                let TaskState::Stream(state) = &mut self.states[task] else {
                    unreachable!();
                };
                if let Some(max_elapsed) = state.sub.flush.max_elapsed {
                    let epoch = state.sub.flush_epoch();
                    let at = state.sub.last_flush_at() + max_elapsed;
                    self.push(at, EventKind::StreamTimer { task, epoch });
                }
                let _ = now;
                Ok(())
            }
        }
    }

    /// One flushed batch = one billed ingest request; items keep their
    /// arrival times as collection stamps.
    fn ingest_batch(&mut self, task: usize, batch: Vec<StreamItem>, _trigger: FlushTrigger) -> Result<()> {
        let pidx = self.task_provider[task];
        let dsidx = self.task_dataset[task];
        let bytes_out: u64 = batch.iter().map(|i| i.bytes()).sum();
        self.accum[pidx].requests += 1;
        self.bill(pidx, 0, bytes_out);
        for item in batch {
            let stamp = self.stamp(pidx, AvailabilityStatus::Collected, item.at);
            let doc = Document::new(item.body, stamp)?;
            let ingest = self.datasets[dsidx].ingest_document(doc)?;
            if ingest.duplicate {
                self.accum[pidx].documents_duplicate += 1;
            } else {
                self.accum[pidx].documents_new += 1;
            }
        }
        Ok(())
    }
}

fn requests_len(task: &TaskSpec) -> usize {
    match task {
        TaskSpec::Pull { requests, .. } => requests.len(),
        _ => 0,
    }
}
