//! Independent oracles shared by the acceptance harness and the integration
//! tests. Each check returns a short summary on success or the first
//! counterexample on failure.

#![allow(dead_code)]

use congestion_core::adversary::{
    apply_adversary, attack_succeeds, brute_force_attack_prob, simulate_attack, AttackScenario,
};
use congestion_core::analysis::{consec_attack_prob, sw_bound, AttackDirection};
use congestion_core::chain::{Block, ChainView, CongestionVector, ControlVector, Transaction};
use congestion_core::challenge::{resolve_deadline, Challenge};
use congestion_core::protocols::{
    evaluate, refresh_evaluate, verify_witness, Percent, ProtocolSpec, RefreshState, Witness,
};
use congestion_core::signal::{
    alt_is_congested, cost_to_congest, cost_to_uncongest, fee_threshold, is_congested, weight_above,
    weight_threshold, AltSignalKind, BlockSignal, SignalParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<String, String>;

pub const DIRECTIONS: [AttackDirection; 2] = [AttackDirection::Congestion, AttackDirection::Uncongestion];
pub const ALPHAS: [f64; 4] = [0.0, 0.2, 0.33, 1.0];
pub const PS: [f64; 4] = [0.0, 0.15, 0.85, 1.0];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sw(n: usize, k: usize) -> ProtocolSpec {
    ProtocolSpec::sliding_window(n, k).unwrap()
}

fn random_bits(rng: &mut ChaCha8Rng, len: usize, p_congested: f64) -> Vec<bool> {
    (0..len).map(|_| rng.gen_bool(p_congested)).collect()
}

fn random_spec(rng: &mut ChaCha8Rng, monotone_only: bool) -> ProtocolSpec {
    let kinds = if monotone_only { 3 } else { 4 };
    match rng.gen_range(0..kinds) {
        0 => ProtocolSpec::cumulative(rng.gen_range(1..8)).unwrap(),
        1 => ProtocolSpec::consecutive(rng.gen_range(1..6)).unwrap(),
        2 => {
            let n = rng.gen_range(1..10);
            sw(n, rng.gen_range(1..=n))
        }
        _ => ProtocolSpec::percentage(Percent::from_millis(rng.gen_range(0..=100_000)).unwrap()),
    }
}

// ---- exact analysis against enumeration

/// Consecutive-run closed forms against full enumeration, window bounds dominating the exact
/// value, and Monte Carlo within four standard errors.
pub fn oracle_equivalence(max_n: usize, mc_trials: u64) -> Check {
    let mut compared = 0;
    for n in 1..=max_n {
        for &alpha in &ALPHAS {
            for &p in &PS {
                for dir in DIRECTIONS {
                    for l in 1..=n + 1 {
                        let exact = consec_attack_prob(dir, l, n, alpha, p).unwrap().to_f64();
                        let spec = ProtocolSpec::consecutive(l).unwrap();
                        let brute = brute_force_attack_prob(&spec, dir, n, alpha, p).unwrap();
                        if (exact - brute).abs() > 1e-10 {
                            return Err(format!(
                                "{spec} {dir} n={n} alpha={alpha} p={p}: closed form {exact} vs enumeration {brute}"
                            ));
                        }
                        compared += 1;
                    }
                }
            }
        }
    }

    let mut bounded = 0;
    for n in 1..=max_n {
        for (big_n, k) in window_grid(n) {
            let spec = sw(big_n, k);
            for &alpha in &ALPHAS {
                for &p in &PS {
                    for dir in DIRECTIONS {
                        let bound = sw_bound(dir, big_n, k, n, alpha, p).unwrap().to_f64();
                        let brute = brute_force_attack_prob(&spec, dir, n, alpha, p).unwrap();
                        if bound < brute - 1e-12 {
                            return Err(format!(
                                "{spec} {dir} n={n} alpha={alpha} p={p}: bound {bound} below exact {brute}"
                            ));
                        }
                        bounded += 1;
                    }
                }
            }
        }
    }

    let mut simulated = 0;
    let specs = ["cum:M=2", "pct:x=50", "lconsec:L=2", "lconsec:L=3", "sw:N=3,K=2", "sw:N=4,K=3"];
    for (i, n) in [3usize, 7, max_n].into_iter().enumerate() {
        for text in specs {
            let spec: ProtocolSpec = text.parse().unwrap();
            for &alpha in &ALPHAS {
                for &p in &PS {
                    for dir in DIRECTIONS {
                        let exact = brute_force_attack_prob(&spec, dir, n, alpha, p).unwrap();
                        let sc = AttackScenario {
                            spec,
                            direction: dir,
                            n,
                            alpha,
                            p,
                            trials: mc_trials,
                            seed: 1000 + i as u64,
                        };
                        let est = simulate_attack(&sc).unwrap();
                        let sigma = est.std_error.max((exact * (1.0 - exact) / mc_trials as f64).sqrt());
                        if (est.success_rate - exact).abs() > 4.0 * sigma + 1e-12 {
                            return Err(format!(
                                "{spec} {dir} n={n} alpha={alpha} p={p}: simulated {} vs exact {exact}",
                                est.success_rate
                            ));
                        }
                        simulated += 1;
                    }
                }
            }
        }
    }
    Ok(format!(
        "{compared} closed-form values exact, {bounded} window bounds dominate, {simulated} simulations within 4 sigma"
    ))
}

/// Window shapes checked at period length `n`: every shape for short
/// periods, a spread of shapes beyond that to bound the 3^n enumeration.
fn window_grid(n: usize) -> Vec<(usize, usize)> {
    let mut grid = Vec::new();
    if n <= 8 {
        for big_n in 1..=n {
            for k in 1..=big_n {
                grid.push((big_n, k));
            }
        }
    } else {
        for big_n in [1, 2, n / 2, n - 1, n] {
            for k in [1, big_n.div_ceil(2), big_n] {
                if !grid.contains(&(big_n, k)) {
                    grid.push((big_n, k));
                }
            }
        }
    }
    grid
}

// ---- protocol properties

/// Uncongestion of a contiguous sub-period carries over to any enclosing
/// period, for the three monotone protocols.
pub fn monotonicity(trials: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let mut implied = 0;
    for _ in 0..trials {
        let spec = random_spec(&mut rng, true);
        let len = rng.gen_range(1..80);
        let density = rng.gen_range(0.3..0.95);
        let bits = random_bits(&mut rng, len, density);
        let lo = rng.gen_range(0..len);
        let hi = rng.gen_range(lo..len);
        let outer_lo = rng.gen_range(0..=lo);
        let outer_hi = rng.gen_range(hi..len);
        if spec.is_uncongested(&bits[lo..=hi]) {
            implied += 1;
            if !spec.is_uncongested(&bits[outer_lo..=outer_hi]) {
                return Err(format!(
                    "{spec}: [{lo}, {hi}] uncongested but enclosing [{outer_lo}, {outer_hi}] is not"
                ));
            }
        }
    }
    Ok(format!("{trials} random inclusions, {implied} with an uncongested inner period"))
}

/// The percentage rule is not monotone: `00` is 100% uncongested, `0011` is not.
pub fn percentage_counterexample() -> Check {
    let spec = ProtocolSpec::percentage(Percent::whole(100).unwrap());
    let inner: CongestionVector = "00".parse().unwrap();
    let outer: CongestionVector = "0011".parse().unwrap();
    if evaluate(&spec, &inner).is_uncongested() && !evaluate(&spec, &outer).is_uncongested() && !spec.is_monotone() {
        Ok("pct:x=100 accepts 00 but rejects 0011".into())
    } else {
        Err("percentage counterexample did not reproduce".into())
    }
}

/// Every vector up to `max_len` blocks and every window up to `max_window`:
/// the reported witness is the first valid window, and `verify_witness`
/// accepts exactly the valid windows.
pub fn witness_exhaustive(max_len: usize, max_window: usize) -> Check {
    let mut cases = 0u64;
    for len in 1..=max_len {
        for mask in 0u32..1 << len {
            let bits: Vec<bool> = (0..len).map(|i| mask >> i & 1 == 1).collect();
            let pe = CongestionVector::new(bits.clone()).unwrap();
            let prefix: Vec<usize> = std::iter::once(0)
                .chain(bits.iter().scan(0, |z, &b| {
                    *z += usize::from(!b);
                    Some(*z)
                }))
                .collect();
            for big_n in 1..=max_window.min(len) {
                for k in 1..=big_n {
                    let valid: Vec<bool> = (0..=len - big_n).map(|s| prefix[s + big_n] - prefix[s] >= k).collect();
                    let first = valid.iter().position(|&v| v).map(|s| s + 1);
                    let spec = sw(big_n, k);
                    let got = evaluate(&spec, &pe);
                    if got.witness.map(|w| w.start_index) != first || got.is_uncongested() != first.is_some() {
                        return Err(format!("{spec} on {pe}: got {got:?}, first valid window {first:?}"));
                    }
                    for start in 0..=len + 1 {
                        let expected = start >= 1 && start <= valid.len() && valid[start - 1];
                        if verify_witness(&spec, &pe, Witness::new(start)) != expected {
                            return Err(format!("{spec} on {pe}: witness {start} misjudged"));
                        }
                    }
                    cases += 1;
                }
            }
            if len <= max_window {
                // consecutive runs are windows with K = N
                for l in 1..=len {
                    let spec = ProtocolSpec::consecutive(l).unwrap();
                    if evaluate(&spec, &pe) != evaluate(&sw(l, l), &pe) {
                        return Err(format!("{spec} disagrees with sw:N={l},K={l} on {pe}"));
                    }
                }
            }
        }
    }
    Ok(format!("{cases} (vector, window) pairs"))
}

/// Extending through the refresh state agrees with rescanning the whole
/// period after every chunk.
pub fn refresh_equivalence(trials: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    for _ in 0..trials {
        let spec = random_spec(&mut rng, false);
        let len = rng.gen_range(0..120);
        let density = rng.gen_range(0.2..0.95);
        let bits = random_bits(&mut rng, len, density);
        let mut state = RefreshState::new(spec);
        let mut at = 0;
        loop {
            let next = rng.gen_range(at..=len);
            let refreshed = refresh_evaluate(&spec, state, &bits[at..next]).unwrap();
            let full = spec.scan(&bits[..next]);
            if refreshed.evaluation != full {
                return Err(format!("{spec} at length {next}: refresh {:?} vs full {full:?}", refreshed.evaluation));
            }
            state = refreshed.state;
            at = next;
            if at == len {
                break;
            }
        }
    }
    Ok(format!("{trials} random periods split at random points"))
}

/// For every period up to `max_n` blocks, control mask and alternative
/// manipulation: if any manipulation wins, forcing every controlled block to
/// the target also wins.
pub fn all_flip_optimality(max_n: usize) -> Check {
    let mut specs: Vec<ProtocolSpec> = Vec::new();
    for m in 1..=4 {
        specs.push(ProtocolSpec::cumulative(m).unwrap());
    }
    for x in [1, 25, 50, 67, 100] {
        specs.push(ProtocolSpec::percentage(Percent::whole(x).unwrap()));
    }
    for l in 1..=4 {
        specs.push(ProtocolSpec::consecutive(l).unwrap());
    }
    for big_n in 1..=4 {
        for k in 1..=big_n {
            specs.push(sw(big_n, k));
        }
    }
    let mut checked = 0u64;
    for n in 1..=max_n {
        let size = 1usize << n;
        let vectors: Vec<Vec<bool>> = (0..size).map(|m| (0..n).map(|i| m >> i & 1 == 1).collect()).collect();
        for spec in &specs {
            for dir in DIRECTIONS {
                let wins: Vec<bool> = vectors.iter().map(|v| attack_succeeds(spec, dir, v)).collect();
                for ctrl in 0..size {
                    for alt in 0..size {
                        let flipped = if dir.target_bit() { alt | ctrl } else { alt & !ctrl };
                        if wins[alt] && !wins[flipped] {
                            return Err(format!(
                                "{spec} {dir} n={n}: manipulation {alt:b} wins but all-flip {flipped:b} loses (ctrl {ctrl:b})"
                            ));
                        }
                    }
                }
                checked += (size * size) as u64;
            }
        }
        // the bit trick above is what apply_adversary computes
        if n <= 6 {
            for pe_mask in 0..size {
                for ctrl in 0..size {
                    let pe = CongestionVector::new(vectors[pe_mask].clone()).unwrap();
                    let c = ControlVector::new(vectors[ctrl].clone());
                    for dir in DIRECTIONS {
                        let flipped = if dir.target_bit() { pe_mask | ctrl } else { pe_mask & !ctrl };
                        if apply_adversary(&pe, &c, dir).unwrap().bits() != vectors[flipped].as_slice() {
                            return Err(format!("apply_adversary({pe}, {c}, {dir}) is not the all-flip vector"));
                        }
                    }
                }
            }
        }
    }
    Ok(format!("{checked} (spec, direction, control, manipulation) cases"))
}

// ---- block signal

fn random_block(rng: &mut ChaCha8Rng) -> Block {
    let count = rng.gen_range(1..8);
    let pairs: Vec<(f64, f64)> = (0..count)
        .map(|_| (rng.gen_range(1..50) as f64, rng.gen_range(0..20) as f64 * 0.5))
        .collect();
    let used: f64 = pairs.iter().map(|p| p.0).sum();
    Block::from_pairs(used + rng.gen_range(0..40) as f64, &pairs).unwrap()
}

/// `theta_B(gamma)` by trying every transaction density as a candidate.
fn fee_threshold_oracle(block: &Block, gamma: f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for tx in block.txs() {
        let d = tx.fee_density();
        let w: f64 = block.txs().iter().filter(|o| o.fee_density() >= d).map(Transaction::size).sum();
        let all = block.txs().iter().all(|o| o.fee_density() >= d);
        let frac = if all { 1.0 } else { w / block.capacity() };
        if frac >= gamma {
            best = best.max(d);
        }
    }
    best
}

/// Fee given up by dropping whole sub-`theta` transactions, cheapest density
/// first, until `gamma` of the block qualifies.
fn greedy_congest_loss(block: &Block, p: SignalParams) -> f64 {
    let deficit = p.gamma() * block.capacity() - weight_above(block, p.theta());
    let mut below: Vec<&Transaction> = block.txs().iter().filter(|t| t.fee_density() < p.theta()).collect();
    below.sort_by(|a, b| a.fee_density().total_cmp(&b.fee_density()));
    let (mut removed, mut loss) = (0.0, 0.0);
    for tx in below {
        if removed >= deficit {
            break;
        }
        removed += tx.size();
        loss += tx.fee();
    }
    loss
}

/// Fee given up by re-pricing qualifying transactions down to `theta`,
/// cheapest first, until the block stops qualifying.
fn greedy_uncongest_loss(block: &Block, p: SignalParams) -> f64 {
    let target = p.gamma() * block.capacity();
    let mut w = weight_above(block, p.theta());
    let mut above: Vec<&Transaction> = block.txs().iter().filter(|t| t.fee_density() >= p.theta()).collect();
    above.sort_by(|a, b| a.fee_density().total_cmp(&b.fee_density()));
    let mut loss = 0.0;
    for tx in above {
        if w < target {
            break;
        }
        w -= tx.size();
        loss += (tx.fee_density() - p.theta()) * tx.size();
    }
    loss
}

/// Threshold duality, brute-force fee threshold, and the manipulation cost
/// bounds against greedy manipulations (with tightness at breakpoints).
pub fn galois_and_costs(trials: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let mut tight = 0;
    for _ in 0..trials {
        let block = random_block(&mut rng);
        let gamma = if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..=1.0) };
        let theta = rng.gen_range(0.0..12.0);
        let p = SignalParams::new(theta, gamma).unwrap();
        let congested = is_congested(&block, p);
        if congested != (gamma <= weight_threshold(&block, theta)) {
            return Err(format!("gamma_B disagrees with the predicate on {block:?} at {p:?}"));
        }
        let theta_b = fee_threshold(&block, gamma).unwrap();
        if gamma > 0.0 && theta_b != fee_threshold_oracle(&block, gamma) {
            return Err(format!("theta_B({gamma}) wrong on {block:?}"));
        }
        for probe in block.txs().iter().map(|t| t.fee_density()).chain([theta, 0.0, 25.0]) {
            let c = is_congested(&block, SignalParams::new(probe, gamma).unwrap());
            if c != (probe <= theta_b) {
                return Err(format!("duality fails at theta={probe}, gamma={gamma} on {block:?}"));
            }
        }
        if congested {
            let bound = cost_to_uncongest(&block, p).unwrap();
            let loss = greedy_uncongest_loss(&block, p);
            if bound < 0.0 || loss < bound - 1e-9 * bound.max(1.0) {
                return Err(format!("uncongest bound {bound} exceeds greedy loss {loss} on {block:?}"));
            }
        } else {
            let bound = cost_to_congest(&block, p).unwrap();
            let loss = greedy_congest_loss(&block, p);
            if bound < 0.0 || loss < bound - 1e-9 * bound.max(1.0) {
                return Err(format!("congest bound {bound} exceeds greedy loss {loss} on {block:?}"));
            }
            // with distinct densities and a deficit ending on a transaction
            // boundary the greedy removal is optimal and the bound is exact
            let mut below: Vec<&Transaction> = block.txs().iter().filter(|t| t.fee_density() < theta).collect();
            below.sort_by(|a, b| a.fee_density().total_cmp(&b.fee_density()));
            let mut densities: Vec<f64> = below.iter().map(|t| t.fee_density()).collect();
            densities.dedup();
            if !below.is_empty() && densities.len() == below.len() {
                let k = rng.gen_range(1..=below.len());
                let deficit: f64 = below[..k].iter().map(|t| t.size()).sum();
                let g = (weight_above(&block, theta) + deficit) / block.capacity();
                if g <= 1.0 {
                    let q = SignalParams::new(theta, g).unwrap();
                    if !is_congested(&block, q) {
                        let bound = cost_to_congest(&block, q).unwrap();
                        let exact: f64 = below[..k].iter().map(|t| t.fee()).sum();
                        if (bound - exact).abs() > 1e-9 * exact.max(1.0) {
                            return Err(format!("congest bound {bound} not tight ({exact}) on {block:?}"));
                        }
                        tight += 1;
                    }
                }
            }
        }
    }
    Ok(format!("{trials} random blocks, {tight} tightness checks"))
}

/// Each alternative signal flips with a revenue change of at most `eps`.
pub fn manipulability_demos() -> Check {
    const EPS: f64 = 1e-6;
    let replace = |block: &Block, index: usize, with: Transaction| {
        let mut txs: Vec<Transaction> = block.real_txs().copied().collect();
        txs[index] = with;
        Block::new(block.capacity(), txs).unwrap()
    };
    let flag = |b: &Block, kind| alt_is_congested(b, kind).unwrap();

    let kind = AltSignalKind::LowestFeeDensity { theta: 5.0 };
    let honest = Block::from_pairs(100.0, &[(99.0, 10.0), (EPS, 5.0), (1.0 - EPS, 6.0)]).unwrap();
    let edited = replace(&honest, 1, Transaction::new(EPS, 0.0).unwrap());
    let ok_lowest = flag(&honest, kind) && !flag(&edited, kind) && honest.revenue() - edited.revenue() <= 5.0 * EPS + 1e-12;

    let kind = AltSignalKind::HighestFeeDensity { theta: 50.0 };
    let honest = Block::from_pairs(100.0, &[(100.0 - EPS, 2.0), (EPS, 1.0)]).unwrap();
    let dummy = Transaction::new(EPS, 1e6).unwrap();
    let edited = replace(&honest, 1, dummy);
    let ok_highest =
        !flag(&honest, kind) && flag(&edited, kind) && honest.revenue() - (edited.revenue() - dummy.fee()) <= EPS + 1e-12;

    let kind = AltSignalKind::NonzeroOccupancy { gamma: 0.9 };
    let honest = Block::from_pairs(100.0, &[(50.0, 3.0)]).unwrap();
    let edited = Block::from_pairs(100.0, &[(50.0, 3.0), (50.0, 1.0)]).unwrap();
    let ok_occupancy = !flag(&honest, kind) && flag(&edited, kind);

    let kind = AltSignalKind::FeeNotDensity { min_fee: 10.0, gamma: 0.6 };
    let honest = Block::from_pairs(100.0, &[(50.0, 0.2), (50.0, 0.2)]).unwrap();
    let edited = replace(&honest, 0, Transaction::new(50.0, 0.2 - EPS / 50.0).unwrap());
    let ok_fee = flag(&honest, kind) && !flag(&edited, kind) && honest.revenue() - edited.revenue() <= EPS * 1.0001;

    // the weighted signal on the same blocks needs a real sacrifice
    let weighted = SignalParams::new(5.0, 0.99).unwrap();
    let cost = cost_to_uncongest(&Block::from_pairs(100.0, &[(99.0, 10.0), (1.0, 6.0)]).unwrap(), weighted).unwrap();
    let ok_weighted = cost >= 1e6 * EPS;

    match (ok_lowest, ok_highest, ok_occupancy, ok_fee, ok_weighted) {
        (true, true, true, true, true) => Ok(format!(
            "lowest-density, highest-density, occupancy and fee-total signals flip for <= 1e-6; weighted signal costs {cost}"
        )),
        flags => Err(format!("demonstration failed: {flags:?}")),
    }
}

// ---- deadline engine

/// Resolutions on random chains against the smallest deadline found by
/// rescanning every candidate period.
pub fn deadline_minimality(chains: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let signal = BlockSignal::Alternative(AltSignalKind::BaseFee { max_base_fee: 0.0 });
    let mut capped = 0;
    for _ in 0..chains {
        let len = rng.gen_range(1..=200usize);
        let density = rng.gen_range(0.5..1.0);
        let bits = random_bits(&mut rng, len, density);
        let big_n = rng.gen_range(1..=12);
        let spec = sw(big_n, rng.gen_range(1..=big_n));
        let t_c = rng.gen_range(0..len as u64);
        let cap = rng.gen_range(t_c..len as u64);
        let t_rd = rng.gen_range(t_c..=cap);
        let ch = Challenge::new(t_c, t_rd, cap - t_c, spec).unwrap();
        let chain = ChainView::from_signals(0, &bits).unwrap();
        let r = resolve_deadline(&chain, &ch, signal).map_err(|e| e.to_string())?;
        let brute = (t_rd..=cap).find(|&t| spec.is_uncongested(&bits[t_c as usize..=t as usize]));
        let expected = (brute.unwrap_or(cap), brute.is_none());
        if r.final_deadline > cap {
            return Err(format!("cap exceeded: {} > {cap}", r.final_deadline));
        }
        if (r.final_deadline, r.capped) != expected {
            return Err(format!(
                "{spec} t_c={t_c} t_rd={t_rd} cap={cap}: got ({}, {}), brute force {expected:?}",
                r.final_deadline, r.capped
            ));
        }
        capped += usize::from(r.capped);
    }
    let worked = ChainView::from_signals(0, &[true, true, true, true, false, true, true]).unwrap();
    let r = resolve_deadline(&worked, &Challenge::new(0, 3, 6, sw(2, 1)).unwrap(), signal).unwrap();
    if r.final_deadline != 4 || r.capped {
        return Err(format!("worked example resolved to {} (capped {})", r.final_deadline, r.capped));
    }
    Ok(format!("{chains} random chains ({capped} capped), worked example -> 4"))
}
