use std::fs;
use std::io::Write;
use std::path::Path;

use congestion_core::adversary::{sweep, AttackScenario, SweepAxis};
use congestion_core::analysis::{consec_attack_prob, sw_bound};
use congestion_core::chain::{detect_format, ingest_chain, ChainEntry, ChainFormat, ChainView};
use congestion_core::challenge::{ChallengeRequest, SignalTrack};
use congestion_core::signal::{cost_to_congest, cost_to_uncongest, AltSignalKind, BlockSignal, SignalParams};
use congestion_core::{AttackDirection, ExtendedProb};

use crate::args::{
    BoundsArgs, ChainInput, DeadlineArgs, MarkovArgs, SearchKArgs, SignalArgs, SimulateArgs, SweepArg,
    DEFAULT_P_CONGESTION, DEFAULT_P_UNCONGESTION,
};
use crate::error::CliError;
use crate::render;

type Out<'a> = &'a mut dyn Write;

fn csv_writer(out: Out<'_>) -> csv::Writer<Out<'_>> {
    csv::Writer::from_writer(out)
}

pub fn bounds(args: &BoundsArgs, out: Out<'_>) -> Result<(), CliError> {
    let ns = args.n.counts("n").map_err(CliError::Usage)?;
    let mut rows = Vec::new();
    for direction in args.direction.directions() {
        let p = args.prob.for_direction(direction);
        for &n in &ns {
            let bound = sw_bound(direction, args.big_n, args.k, n, args.alpha, p)?;
            rows.push([
                direction.to_string(),
                args.big_n.to_string(),
                args.k.to_string(),
                n.to_string(),
                args.alpha.to_string(),
                p.to_string(),
                render::probability(bound),
            ]);
        }
    }
    let mut w = csv_writer(out);
    w.write_record(["direction", "N", "K", "n", "alpha", "p", "bound"])?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn markov(args: &MarkovArgs, out: Out<'_>) -> Result<(), CliError> {
    let ls = args.l.counts("L").map_err(CliError::Usage)?;
    let mut rows = Vec::new();
    for direction in args.direction.directions() {
        let p = args.prob.for_direction(direction);
        for &l in &ls {
            let prob = consec_attack_prob(direction, l, args.n, args.alpha, p)?;
            rows.push([
                direction.to_string(),
                l.to_string(),
                args.n.to_string(),
                args.alpha.to_string(),
                p.to_string(),
                render::probability(prob),
            ]);
        }
    }
    let mut w = csv_writer(out);
    w.write_record(["direction", "L", "n", "alpha", "p", "success_prob"])?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Picks the swept axis: `--sweep`, else whichever of `--n` and `--alpha`
/// holds more than one value.
fn sweep_plan(args: &SimulateArgs) -> Result<(SweepAxis, Vec<f64>), CliError> {
    let multi_n = args.n.single().is_none();
    let multi_alpha = args.alpha.single().is_none();
    if let (Some(axis), Some(values)) = (args.sweep, &args.values) {
        let axis = match axis {
            SweepArg::N => SweepAxis::Period,
            SweepArg::Window => SweepAxis::Window,
            SweepArg::K => SweepAxis::K,
            SweepArg::L => SweepAxis::L,
            SweepArg::Alpha => SweepAxis::Alpha,
        };
        if multi_n || multi_alpha {
            return Err(CliError::Usage("with --sweep, --n and --alpha take a single value".into()));
        }
        return Ok((axis, values.values().to_vec()));
    }
    match (multi_n, multi_alpha) {
        (true, true) => Err(CliError::Usage("only one of --n and --alpha may list several values".into())),
        (_, true) => Ok((SweepAxis::Alpha, args.alpha.values().to_vec())),
        _ => Ok((SweepAxis::Period, args.n.values().to_vec())),
    }
}

pub fn simulate(args: &SimulateArgs, out: Out<'_>) -> Result<(), CliError> {
    let direction: AttackDirection = args.direction.into();
    let p = args.p.unwrap_or(match direction {
        AttackDirection::Uncongestion => DEFAULT_P_UNCONGESTION,
        AttackDirection::Congestion => DEFAULT_P_CONGESTION,
    });
    let (axis, values) = sweep_plan(args)?;
    let first = |list: &crate::values::ValueList| list.values()[0];
    let n = first(&args.n);
    if !(n >= 1.0 && n.fract() == 0.0) {
        return Err(CliError::Usage(format!("--n expects whole numbers, got {n}")));
    }
    let template = AttackScenario {
        spec: args.spec,
        direction,
        n: n as usize,
        alpha: first(&args.alpha),
        p,
        trials: args.trials,
        seed: args.seed,
    };
    let rows = sweep(&template, axis, &values)?;
    for row in &rows {
        if let Some(bound) = row.estimate.rule_of_three() {
            eprintln!(
                "note: no successes at {}; rule-of-three 95% upper bound {bound:.3e}",
                row.axis_value
            );
        }
    }
    let mut w = csv_writer(out);
    w.write_record(["axis_value", "success_rate", "std_error", "trials"])?;
    for row in rows {
        w.write_record([
            row.axis_value.to_string(),
            row.estimate.success_rate.to_string(),
            row.estimate.std_error.to_string(),
            row.estimate.trials.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// A published table entry.
#[derive(Debug, Clone, Copy)]
pub enum Reported {
    Value(f64),
    /// Printed only as lying below the report floor.
    BelowFloor,
}

/// Window, K, uncongestion bound over [`TABLE_M_HAT`] blocks and
/// single-window congestion bound, as published for Ethereum-scale windows.
pub const PUBLISHED_TABLE: [(usize, usize, Reported, f64); 4] = [
    (6450, 3225, Reported::BelowFloor, 1.44e-29),
    (3225, 1612, Reported::Value(1.26e-10), 8.06e-16),
    (1612, 815, Reported::Value(7.14e-5), 1.08e-7),
    (806, 421, Reported::Value(8.87e-3), 3.16e-3),
];
pub const TABLE_M_HAT: usize = 90_300;
pub const TABLE_ALPHA: f64 = 0.33;

/// Agreement to the two significant figures the table prints.
pub fn matches_reported(computed: ExtendedProb, reported: Reported) -> bool {
    match reported {
        Reported::Value(v) => {
            let unit = 10f64.powf(v.log10().floor() - 1.0);
            (computed.to_f64() - v).abs() <= 0.5 * unit
        }
        Reported::BelowFloor => computed < ExtendedProb::from_f64(render::REPORT_FLOOR),
    }
}

fn show_reported(r: Reported) -> String {
    match r {
        Reported::Value(v) => format!("{v:.2e}"),
        Reported::BelowFloor => "<1e-300".to_string(),
    }
}

pub fn reproduce_table(out: Out<'_>) -> Result<(), CliError> {
    let mut w = csv_writer(out);
    w.write_record([
        "N",
        "K",
        "uncongestion_bound",
        "uncongestion_reported",
        "uncongestion_match",
        "congestion_bound",
        "congestion_reported",
        "congestion_match",
    ])?;
    for (big_n, k, unc_reported, con_reported) in PUBLISHED_TABLE {
        let unc = sw_bound(AttackDirection::Uncongestion, big_n, k, TABLE_M_HAT, TABLE_ALPHA, DEFAULT_P_UNCONGESTION)?;
        let con = sw_bound(AttackDirection::Congestion, big_n, k, big_n, TABLE_ALPHA, DEFAULT_P_CONGESTION)?;
        let con_reported = Reported::Value(con_reported);
        w.write_record([
            big_n.to_string(),
            k.to_string(),
            render::probability(unc),
            show_reported(unc_reported),
            matches_reported(unc, unc_reported).to_string(),
            render::probability(con),
            show_reported(con_reported),
            matches_reported(con, con_reported).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.display().to_string(),
        source,
    })
}

fn load_chain(input: &ChainInput) -> Result<ChainView, CliError> {
    let text = read_file(&input.chain)?;
    let format: ChainFormat = match input.format {
        Some(f) => f.into(),
        None => {
            let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
            detect_format(first).ok_or_else(|| {
                CliError::Input(format!("{}: cannot tell the chain format from the first record", input.chain.display()))
            })?
        }
    };
    Ok(ingest_chain(text.as_bytes(), format)?)
}

pub fn deadline(args: &DeadlineArgs, out: Out<'_>) -> Result<(), CliError> {
    let text = read_file(&args.challenge)?;
    let request: ChallengeRequest = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.challenge.display())))?;
    let chain = load_chain(&args.input)?;
    let track = SignalTrack::new(&chain, request.signal);
    let json = match args.response {
        Some(h) => serde_json::to_string_pretty(&track.adjudicate(&request.challenge, h)?),
        None => serde_json::to_string_pretty(&track.resolve(&request.challenge)?),
    }
    .expect("resolutions serialize");
    writeln!(out, "{json}")?;
    Ok(())
}

/// Both worst-case bounds for one K.
struct KRow {
    k: usize,
    uncongestion: ExtendedProb,
    congestion: ExtendedProb,
}

impl KRow {
    /// The larger bound, capped at 1 since a union bound can exceed it.
    fn worst(&self) -> ExtendedProb {
        self.uncongestion.max(self.congestion).min(ExtendedProb::from_f64(1.0))
    }
}

pub fn search_k(args: &SearchKArgs, out: Out<'_>) -> Result<(), CliError> {
    if args.big_n == 0 {
        return Err(CliError::Usage("--N must be at least 1".into()));
    }
    let rows = (1..=args.big_n)
        .map(|k| {
            Ok(KRow {
                k,
                uncongestion: sw_bound(
                    AttackDirection::Uncongestion,
                    args.big_n,
                    k,
                    args.m_hat,
                    args.alpha,
                    args.p_uncongestion,
                )?,
                congestion: sw_bound(AttackDirection::Congestion, args.big_n, k, args.big_n, args.alpha, args.p_congestion)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    // ties go to the smaller K
    let best = rows
        .iter()
        .min_by(|a, b| a.worst().cmp(&b.worst()).then(a.k.cmp(&b.k)))
        .expect("N >= 1");
    let target = ExtendedProb::from_f64(args.target.clamp(0.0, 1.0));
    let mut w = csv_writer(out);
    w.write_record(["N", "K", "uncongestion_bound", "congestion_bound", "max_bound", "meets_target", "best"])?;
    for row in &rows {
        let is_best = row.k == best.k;
        if !(args.all || is_best) {
            continue;
        }
        w.write_record([
            args.big_n.to_string(),
            row.k.to_string(),
            render::probability(row.uncongestion),
            render::probability(row.congestion),
            render::probability(row.worst()),
            (row.worst() <= target).to_string(),
            is_best.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn chosen_signal(args: &SignalArgs) -> Result<BlockSignal, CliError> {
    if let Some(json) = &args.signal {
        return serde_json::from_str(json).map_err(|e| CliError::Usage(format!("--signal: {e}")));
    }
    if let (Some(theta), Some(gamma)) = (args.theta, args.gamma) {
        return Ok(BlockSignal::Weighted(SignalParams::new(theta, gamma)?));
    }
    if let Some(max_base_fee) = args.max_base_fee {
        let kind = AltSignalKind::BaseFee { max_base_fee };
        kind.validate()?;
        return Ok(BlockSignal::Alternative(kind));
    }
    Err(CliError::Usage("choose a signal with --signal, --theta/--gamma or --max-base-fee".into()))
}

pub fn signal(args: &SignalArgs, out: Out<'_>) -> Result<(), CliError> {
    let signal = chosen_signal(args)?;
    let chain = load_chain(&args.input)?;
    let mut w = csv_writer(out);
    w.write_record(["height", "congested", "flip_cost"])?;
    for (offset, entry) in chain.entries().iter().enumerate() {
        let congested = signal.evaluate(entry)?;
        // the cost bounds exist only for the weighted signal on full blocks
        let flip_cost = match (entry, signal) {
            (ChainEntry::Block(block), BlockSignal::Weighted(params)) => {
                let cost = if congested {
                    cost_to_uncongest(block, params)?
                } else {
                    cost_to_congest(block, params)?
                };
                cost.to_string()
            }
            _ => String::new(),
        };
        w.write_record([
            (chain.first_height() + offset as u64).to_string(),
            u8::from(congested).to_string(),
            flip_cost,
        ])?;
    }
    w.flush()?;
    Ok(())
}
