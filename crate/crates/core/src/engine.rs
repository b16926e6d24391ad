//! Event-driven macro simulation.
//!
//! There is no global clock. Each row's flag rises on its first input spike
//! and falls on its second. The global flag is the OR of the row flags and
//! stays high until the last pending input event has completed. Between two
//! consecutive events the set of active rows is fixed, so every column's
//! driving conductance is constant and its charge advances in closed form.
//!
//! When the global flag falls the first output spike is emitted, charging
//! stops and the reference ramps start. Each column's comparator crossing is
//! computed analytically and scheduled as an event carrying the second
//! output spike.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::analog::{self, rc_step, ChargeState, MacroConfig, ReadoutMode};
use crate::codec::InputVector;
use crate::device::CrossbarArray;
use crate::error::{Error, Result};
use crate::time::SimTime;

/// Event kinds in tie-break order: at equal times a fall is handled before a
/// rise, rises before the global flag fall, and comparator crossings last.
/// Within a kind the lower index goes first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    SpikeFall(usize),
    SpikeRise(usize),
    GlobalFlagFall,
    ComparatorCross(usize),
}

impl EventKind {
    pub fn is_spike(self) -> bool {
        matches!(self, EventKind::SpikeFall(_) | EventKind::SpikeRise(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Event {
    pub time: SimTime,
    pub kind: EventKind,
}

/// Min-ordered event queue.
#[derive(Debug, Default, Clone)]
pub struct EventQueue {
    heap: BinaryHeap<Reverse<Event>>,
}

impl EventQueue {
    pub fn push(&mut self, time: SimTime, kind: EventKind) {
        self.heap.push(Reverse(Event { time, kind }));
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop().map(|Reverse(e)| e)
    }

    pub fn peek(&self) -> Option<&Event> {
        self.heap.peek().map(|Reverse(e)| e)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Drains the queue in processing order.
    pub fn into_sorted_vec(mut self) -> Vec<Event> {
        std::iter::from_fn(move || self.pop()).collect()
    }
}

/// Queues a rise and a fall for every row with a non-empty spike pair.
/// Zero-length pairs carry no charge and generate no events.
pub fn schedule_inputs(inputs: &InputVector) -> EventQueue {
    let mut queue = EventQueue::default();
    for (row, pair) in inputs.entries().iter().enumerate() {
        if pair.is_empty() {
            continue;
        }
        queue.push(pair.t_first(), EventKind::SpikeRise(row));
        queue.push(pair.t_second(), EventKind::SpikeFall(row));
    }
    queue
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Idle,
    Accumulating,
    Comparing,
    Done,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroState {
    pub row_flags: Vec<bool>,
    pub global_flag: bool,
    pub column_charge: Vec<ChargeState>,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Signal {
    RowFlag(usize),
    GlobalFlag,
    VCharge(usize),
    OutputSpike(usize),
}

impl std::fmt::Display for Signal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Signal::RowFlag(r) => write!(f, "event_flag[{r}]"),
            Signal::GlobalFlag => write!(f, "event_flag"),
            Signal::VCharge(c) => write!(f, "v_charge[{c}]"),
            Signal::OutputSpike(c) => write!(f, "out_spike[{c}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSample {
    pub time: SimTime,
    pub signal: Signal,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MvmResult {
    /// Time of the first output spike, shared by all columns.
    pub t_first_out: SimTime,
    /// Output interval per column, in seconds.
    pub t_out: Vec<f64>,
    pub v_charge_final: Vec<f64>,
    pub saturated: Vec<bool>,
    /// Every event popped from the queue, spikes included.
    pub event_count: usize,
    pub spike_events: usize,
    pub trace: Option<Vec<TraceSample>>,
}

impl MvmResult {
    /// Output intervals decoded to `sum(T_in * G)` in S·s.
    pub fn decoded(&self, cfg: &MacroConfig) -> Vec<f64> {
        let a = analog::alpha(cfg);
        self.t_out.iter().map(|&t| crate::codec::decode_interval(t, a)).collect()
    }

    /// Time of each column's second output spike, rounded to the femtosecond.
    pub fn second_spike_times(&self) -> Vec<SimTime> {
        self.t_out
            .iter()
            .map(|&t| self.t_first_out + SimTime::from_secs_f64(t))
            .collect()
    }

    /// True when every float field matches bit for bit.
    pub fn bit_identical(&self, other: &MvmResult) -> bool {
        let same = |a: &[f64], b: &[f64]| {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
        };
        self.t_first_out == other.t_first_out
            && same(&self.t_out, &other.t_out)
            && same(&self.v_charge_final, &other.v_charge_final)
            && self.saturated == other.saturated
            && self.event_count == other.event_count
            && self.spike_events == other.spike_events
    }
}

/// One MVM in flight. Drive it with [`MacroSim::step`] or run it to
/// completion with [`MacroSim::run`].
pub struct MacroSim<'a> {
    array: &'a CrossbarArray,
    cfg: &'a MacroConfig,
    mode: ReadoutMode,
    queue: EventQueue,
    state: MacroState,
    /// Sum of active conductances per column.
    active_g: Vec<f64>,
    active_rows: usize,
    pending_spikes: usize,
    /// Ideal mode: accumulated `sum(G * dt)` in S·fs. Nonideal mode: volts.
    acc: Vec<f64>,
    t_last: SimTime,
    t_first_out: SimTime,
    t_out: Vec<f64>,
    crossings_left: usize,
    event_count: usize,
    spike_events: usize,
    trace: Option<Vec<TraceSample>>,
}

impl<'a> MacroSim<'a> {
    pub fn new(
        array: &'a CrossbarArray,
        inputs: &InputVector,
        cfg: &'a MacroConfig,
        mode: ReadoutMode,
    ) -> Result<Self> {
        if inputs.len() != array.rows() {
            return Err(Error::DimensionMismatch(format!(
                "{} input rows for a {}-row array",
                inputs.len(),
                array.rows()
            )));
        }
        let queue = schedule_inputs(inputs);
        let cols = array.cols();
        Ok(Self {
            array,
            cfg,
            mode,
            pending_spikes: queue.len(),
            queue,
            state: MacroState {
                row_flags: vec![false; array.rows()],
                global_flag: false,
                column_charge: vec![ChargeState::default(); cols],
                phase: Phase::Idle,
            },
            active_g: vec![0.0; cols],
            active_rows: 0,
            acc: vec![0.0; cols],
            t_last: SimTime::ZERO,
            t_first_out: SimTime::ZERO,
            t_out: vec![0.0; cols],
            crossings_left: 0,
            event_count: 0,
            spike_events: 0,
            trace: None,
        })
    }

    /// Records flag transitions, per-column charge at flag fall and output
    /// spikes.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn state(&self) -> &MacroState {
        &self.state
    }

    fn record(&mut self, time: SimTime, signal: Signal, value: f64) {
        if let Some(trace) = &mut self.trace {
            trace.push(TraceSample { time, signal, value });
        }
    }

    fn set_phase(&mut self, next: Phase) {
        debug_assert!(next > self.state.phase, "{:?} -> {next:?}", self.state.phase);
        self.state.phase = next;
    }

    /// Charges every column over `[t_last, t)` with the current active set.
    fn advance_to(&mut self, t: SimTime) {
        let dt_fs = (t - self.t_last).as_fs();
        self.t_last = t;
        if dt_fs == 0 || self.active_rows == 0 {
            return;
        }
        match self.mode {
            ReadoutMode::Ideal => {
                let dt = dt_fs as f64;
                for (acc, g) in self.acc.iter_mut().zip(&self.active_g) {
                    *acc += g * dt;
                }
            }
            ReadoutMode::Nonideal => {
                let dt = SimTime(dt_fs).as_secs_f64();
                let v_read = self.cfg.v_read();
                let c_rt = self.cfg.c_rt;
                for (v, &g) in self.acc.iter_mut().zip(&self.active_g) {
                    *v = rc_step(*v, v_read, g, dt, c_rt);
                }
            }
        }
    }

    fn column_voltage(&self, col: usize) -> f64 {
        match self.mode {
            ReadoutMode::Ideal => analog::charge_from_sum_tg(self.acc[col] * 1e-15, self.cfg),
            ReadoutMode::Nonideal => self.acc[col],
        }
    }

    /// Processes the next event. Returns `None` once the queue is empty.
    pub fn step(&mut self) -> Option<Event> {
        let event = self.queue.pop()?;
        self.event_count += 1;
        if self.state.phase == Phase::Accumulating {
            self.advance_to(event.time);
        }
        match event.kind {
            EventKind::SpikeRise(row) => {
                self.spike_events += 1;
                self.pending_spikes -= 1;
                if !self.state.global_flag {
                    self.state.global_flag = true;
                    self.t_last = event.time;
                    self.set_phase(Phase::Accumulating);
                    self.record(event.time, Signal::GlobalFlag, 1.0);
                }
                self.state.row_flags[row] = true;
                self.active_rows += 1;
                for (a, g) in self.active_g.iter_mut().zip(self.array.row_conductances(row)) {
                    *a += g;
                }
                self.record(event.time, Signal::RowFlag(row), 1.0);
            }
            EventKind::SpikeFall(row) => {
                self.spike_events += 1;
                self.pending_spikes -= 1;
                self.state.row_flags[row] = false;
                self.active_rows -= 1;
                if self.active_rows == 0 {
                    self.active_g.iter_mut().for_each(|a| *a = 0.0);
                } else {
                    for (a, g) in self.active_g.iter_mut().zip(self.array.row_conductances(row)) {
                        *a -= g;
                    }
                }
                self.record(event.time, Signal::RowFlag(row), 0.0);
                if self.pending_spikes == 0 {
                    self.queue.push(event.time, EventKind::GlobalFlagFall);
                }
            }
            EventKind::GlobalFlagFall => self.on_flag_fall(event.time),
            EventKind::ComparatorCross(col) => {
                self.record(event.time, Signal::OutputSpike(col), 1.0);
                self.crossings_left -= 1;
                if self.crossings_left == 0 {
                    self.set_phase(Phase::Done);
                }
            }
        }
        Some(event)
    }

    fn on_flag_fall(&mut self, time: SimTime) {
        self.state.global_flag = false;
        self.t_first_out = time;
        self.set_phase(Phase::Comparing);
        self.record(time, Signal::GlobalFlag, 0.0);
        for col in 0..self.array.cols() {
            self.record(time, Signal::OutputSpike(col), 1.0);
        }

        let cols = self.array.cols();
        let voltages: Vec<f64> = (0..cols).map(|c| self.column_voltage(c)).collect();
        for (col, &v) in voltages.iter().enumerate() {
            self.state.column_charge[col] = ChargeState::new(v, self.cfg);
            self.t_out[col] = analog::output_interval(v, self.cfg);
            self.record(time, Signal::VCharge(col), v);
            let cross_at = time + SimTime::from_secs_f64(self.t_out[col]);
            self.queue.push(cross_at, EventKind::ComparatorCross(col));
        }
        self.crossings_left = cols;
    }

    pub fn run(mut self) -> MvmResult {
        while self.step().is_some() {}
        self.finish()
    }

    pub fn finish(self) -> MvmResult {
        MvmResult {
            t_first_out: self.t_first_out,
            t_out: self.t_out,
            v_charge_final: self.state.column_charge.iter().map(|c| c.v_charge).collect(),
            saturated: self.state.column_charge.iter().map(|c| c.saturated).collect(),
            event_count: self.event_count,
            spike_events: self.spike_events,
            trace: self.trace,
        }
    }
}

pub fn run_mvm(
    array: &CrossbarArray,
    inputs: &InputVector,
    cfg: &MacroConfig,
    mode: ReadoutMode,
) -> Result<MvmResult> {
    Ok(MacroSim::new(array, inputs, cfg, mode)?.run())
}

/// Runs independent MVMs on the same array. Output order matches input order.
pub fn run_mvm_batch(
    array: &CrossbarArray,
    batch: &[InputVector],
    cfg: &MacroConfig,
    mode: ReadoutMode,
) -> Result<Vec<MvmResult>> {
    batch
        .par_iter()
        .map(|inputs| run_mvm(array, inputs, cfg, mode))
        .collect()
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;
    use crate::codec::{encode, TimingConfig};
    use crate::device::{program_array, WeightCode, WeightMatrix};

    fn encode_all(values: &[u32]) -> InputVector {
        InputVector::encode(values, SimTime::ZERO, &TimingConfig::default()).unwrap()
    }

    fn array(rows: &[Vec<u32>]) -> CrossbarArray {
        program_array(&WeightMatrix::from_rows(rows).unwrap(), &MacroConfig::default()).unwrap()
    }

    #[test]
    fn schedule_examples() {
        assert!(schedule_inputs(&encode_all(&[0; 16])).is_empty());

        let q = schedule_inputs(&encode_all(&[100])).into_sorted_vec();
        assert_eq!(
            q,
            vec![
                Event { time: SimTime::ZERO, kind: EventKind::SpikeRise(0) },
                Event { time: SimTime::from_ns(20), kind: EventKind::SpikeFall(0) },
            ]
        );

        let arr = array(&[vec![3], vec![3]]);
        let cfg = MacroConfig::default();
        let r = run_mvm(&arr, &encode_all(&[100, 255]), &cfg, ReadoutMode::Ideal).unwrap();
        assert_eq!(r.t_first_out, SimTime::from_ns(51));
    }

    #[test]
    fn tie_break_order() {
        let t = SimTime::from_ns(1);
        let mut events = vec![
            Event { time: t, kind: EventKind::ComparatorCross(0) },
            Event { time: t, kind: EventKind::GlobalFlagFall },
            Event { time: t, kind: EventKind::SpikeRise(0) },
            Event { time: t, kind: EventKind::SpikeFall(5) },
            Event { time: t, kind: EventKind::SpikeFall(2) },
            Event { time: SimTime::ZERO, kind: EventKind::ComparatorCross(9) },
        ];
        events.sort();
        let kinds: Vec<_> = events.iter().map(|e| e.kind).collect();
        assert_eq!(
            kinds,
            vec![
                EventKind::ComparatorCross(9),
                EventKind::SpikeFall(2),
                EventKind::SpikeFall(5),
                EventKind::SpikeRise(0),
                EventKind::GlobalFlagFall,
                EventKind::ComparatorCross(0),
            ]
        );
    }

    #[test]
    fn back_to_back_rows_do_not_double_count() {
        // Row 1 starts exactly when row 0 ends.
        let cfg = MacroConfig::default();
        let timing = cfg.timing;
        let arr = array(&[vec![3], vec![3]]);
        let inputs = InputVector::from_pairs(vec![
            encode(50, SimTime::ZERO, &timing).unwrap(),
            encode(50, SimTime::from_ns(10), &timing).unwrap(),
        ]);
        let r = run_mvm(&arr, &inputs, &cfg, ReadoutMode::Ideal).unwrap();
        let expected = analog::alpha(&cfg) * 2.0 * 10e-9 / 3.0e6;
        assert_relative_eq!(r.t_out[0], expected, max_relative = 1e-12);
        assert_eq!(r.t_first_out, SimTime::from_ns(20));
    }

    #[test]
    fn gaps_keep_global_flag_high() {
        let cfg = MacroConfig::default();
        let timing = cfg.timing;
        let arr = array(&[vec![3], vec![3]]);
        let inputs = InputVector::from_pairs(vec![
            encode(5, SimTime::ZERO, &timing).unwrap(),
            encode(5, SimTime::from_ns(30), &timing).unwrap(),
        ]);
        let mut sim = MacroSim::new(&arr, &inputs, &cfg, ReadoutMode::Ideal).unwrap();
        let mut saw_gap = false;
        while let Some(ev) = sim.step() {
            let st = sim.state();
            if ev.kind == EventKind::SpikeFall(0) {
                assert!(st.global_flag);
                assert!(st.row_flags.iter().all(|f| !f));
                saw_gap = true;
            }
            if ev.kind.is_spike() && st.row_flags.iter().any(|&f| f) {
                assert!(st.global_flag);
            }
        }
        assert!(saw_gap);
        let r = sim.finish();
        assert_eq!(r.t_first_out, SimTime::from_ns(31));
        assert_relative_eq!(r.t_out[0], analog::alpha(&cfg) * 2e-9 / 3.0e6, max_relative = 1e-12);
    }

    #[test]
    fn phases_progress_in_order() {
        let cfg = MacroConfig::default();
        let arr = array(&[vec![3, 0], vec![1, 2]]);
        let mut sim = MacroSim::new(&arr, &encode_all(&[10, 20]), &cfg, ReadoutMode::Ideal).unwrap();
        let mut phases = vec![sim.state().phase];
        while sim.step().is_some() {
            if phases.last() != Some(&sim.state().phase) {
                phases.push(sim.state().phase);
            }
        }
        assert_eq!(phases, vec![Phase::Idle, Phase::Accumulating, Phase::Comparing, Phase::Done]);
    }

    #[test]
    fn all_zero_inputs() {
        let cfg = MacroConfig::default();
        let arr = program_array(&WeightMatrix::filled(128, 128, WeightCode::new(3).unwrap()), &cfg).unwrap();
        let r = run_mvm(&arr, &encode_all(&[0; 128]), &cfg, ReadoutMode::Ideal).unwrap();
        assert_eq!(r.event_count, 0);
        assert_eq!(r.spike_events, 0);
        assert_eq!(r.t_first_out, SimTime::ZERO);
        assert!(r.t_out.iter().all(|&t| t == 0.0));
        assert!(r.v_charge_final.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn worst_case_design_point() {
        let cfg = MacroConfig::default();
        let arr = program_array(&WeightMatrix::filled(128, 128, WeightCode::new(3).unwrap()), &cfg).unwrap();
        let r = run_mvm(&arr, &encode_all(&[255; 128]), &cfg, ReadoutMode::Ideal).unwrap();
        for c in 0..128 {
            assert_relative_eq!(r.v_charge_final[c], 1.088, max_relative = 1e-9);
            assert_relative_eq!(r.t_out[c], 10.88e-9, max_relative = 1e-9);
            assert!(!r.saturated[c]);
        }
        assert_eq!(r.event_count, 2 * 128 + 1 + 128);
        assert_eq!(r.second_spike_times()[0], SimTime::from_ns(51) + SimTime::from_fs(10_880_000));
    }

    #[test]
    fn single_cell_chain() {
        let cfg = MacroConfig::default();
        let arr = array(&[vec![3]]);
        let r = run_mvm(&arr, &encode_all(&[100]), &cfg, ReadoutMode::Ideal).unwrap();
        assert_relative_eq!(r.t_out[0], 33.333_333e-12, max_relative = 1e-6);
        assert_relative_eq!(r.decoded(&cfg)[0], 20e-9 / 3e6, max_relative = 1e-12);
    }

    #[test]
    fn nonideal_mode_droops_and_stays_below_read_voltage() {
        let cfg = MacroConfig::default();
        let arr = program_array(&WeightMatrix::filled(128, 4, WeightCode::new(3).unwrap()), &cfg).unwrap();
        let inputs = encode_all(&[255; 128]);
        let ideal = run_mvm(&arr, &inputs, &cfg, ReadoutMode::Ideal).unwrap();
        let non = run_mvm(&arr, &inputs, &cfg, ReadoutMode::Nonideal).unwrap();
        for c in 0..4 {
            assert!(non.v_charge_final[c] < cfg.v_read());
            assert!(non.t_out[c] < ideal.t_out[c]);
            assert!(!non.saturated[c]);
        }
        // Against the single-pole closed form for a constant 128 x 333 nS load.
        let g: f64 = 128.0 / 3.0e6;
        let expected = cfg.v_read() * -(-g * 51e-9 / cfg.c_rt).exp_m1();
        assert_relative_eq!(non.v_charge_final[0], expected, max_relative = 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let arr = array(&[vec![3], vec![3]]);
        let err = run_mvm(&arr, &encode_all(&[1]), &MacroConfig::default(), ReadoutMode::Ideal);
        assert!(matches!(err, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn batch_semantics() {
        let cfg = MacroConfig::default();
        let arr = array(&[vec![3, 1], vec![0, 2]]);
        assert!(run_mvm_batch(&arr, &[], &cfg, ReadoutMode::Ideal).unwrap().is_empty());
        let v = encode_all(&[17, 200]);
        let out = run_mvm_batch(&arr, &[v.clone(), v], &cfg, ReadoutMode::Ideal).unwrap();
        assert!(out[0].bit_identical(&out[1]));
    }

    #[test]
    fn trace_records_flags_and_spikes() {
        let cfg = MacroConfig::default();
        let arr = array(&[vec![3], vec![2]]);
        let sim = MacroSim::new(&arr, &encode_all(&[10, 0]), &cfg, ReadoutMode::Ideal)
            .unwrap()
            .with_trace();
        let r = sim.run();
        let trace = r.trace.unwrap();
        let names: Vec<String> = trace.iter().map(|s| s.signal.to_string()).collect();
        assert_eq!(
            names,
            vec!["event_flag", "event_flag[0]", "event_flag[0]", "event_flag", "out_spike[0]", "v_charge[0]", "out_spike[0]"]
        );
        assert!(trace.windows(2).all(|w| w[0].time <= w[1].time));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn frugality_bound(values in proptest::collection::vec(prop_oneof![Just(0u32), 1u32..256], 1..48), cols in 1usize..12) {
            let cfg = MacroConfig::default();
            let arr = program_array(&WeightMatrix::filled(values.len(), cols, WeightCode::new(1).unwrap()), &cfg).unwrap();
            let inputs = encode_all(&values);
            let z = inputs.nonzero_rows();
            let r = run_mvm(&arr, &inputs, &cfg, ReadoutMode::Ideal).unwrap();
            prop_assert!(r.event_count <= 2 * z + 1 + cols);
            prop_assert_eq!(r.spike_events, 2 * z);
        }

        #[test]
        fn matches_closed_form_with_offsets(
            rows in proptest::collection::vec((0u32..256, 0u32..4, 0u64..20_000_000), 1..40),
        ) {
            let cfg = MacroConfig::default();
            let weights: Vec<Vec<u32>> = rows.iter().map(|&(_, w, _)| vec![w, 3 - w]).collect();
            let arr = array(&weights);
            let values: Vec<u32> = rows.iter().map(|r| r.0).collect();
            let offsets: Vec<SimTime> = rows.iter().map(|r| SimTime(r.2)).collect();
            let inputs = InputVector::encode_with_offsets(&values, &offsets, &cfg.timing).unwrap();
            let r = run_mvm(&arr, &inputs, &cfg, ReadoutMode::Ideal).unwrap();
            let intervals: Vec<SimTime> = inputs.intervals().collect();
            for col in 0..2 {
                let g: Vec<f64> = (0..arr.rows()).map(|i| arr.conductance(i, col)).collect();
                let v = analog::ideal_charge(&intervals, &g, &cfg).unwrap().v_charge;
                let t = analog::output_interval(v, &cfg);
                prop_assert!((r.t_out[col] - t).abs() <= 1e-12 * t.max(1e-30));
            }
        }
    }
}
