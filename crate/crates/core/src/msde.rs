//! Mixed-strategy differential evolution for black-box maximization.
//!
//! Every target vector draws its own scale factor `F ~ N(0.5, 0.3)`, a
//! crossover rate `CR ~ N(0.5, 0.1)` resampled until it lands in `[0, 1]`,
//! and one of four classic mutation strategies chosen uniformly at random.
//! Trials compete greedily against their targets (ties go to the trial), the
//! population is updated in place, and the best index is refreshed after
//! every selection, so later mutations within a generation see accepted
//! trials immediately. Runs are bitwise-reproducible from the seed.

use crate::error::CoreError;
use crate::scalar::Float;
use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Coupling constant of the current-to-rand strategy.
const STRATEGY4_K: f64 = 0.5;

/// Reflection bounces tried per coordinate before falling back to clamping.
const REFLECT_LIMIT: usize = 64;

/// Rectangular search box with elementwise bounds.
#[derive(Debug, Clone)]
pub struct SearchSpace<T: Float> {
    lower: Array1<T>,
    upper: Array1<T>,
}

impl<T: Float> SearchSpace<T> {
    /// Validates `lower < upper` elementwise and a dimension of at least one.
    pub fn new(lower: Array1<T>, upper: Array1<T>) -> Result<Self, CoreError> {
        if lower.is_empty() {
            return Err(CoreError::InvalidParameter(
                "search space dimension must be at least 1".into(),
            ));
        }
        if lower.len() != upper.len() {
            return Err(CoreError::DimensionMismatch(format!(
                "lower bounds length {} does not match upper bounds length {}",
                lower.len(),
                upper.len()
            )));
        }
        for j in 0..lower.len() {
            if !lower[j].is_finite() || !upper[j].is_finite() {
                return Err(CoreError::NonFinite(format!(
                    "search space bounds must be finite at coordinate {j}"
                )));
            }
            if lower[j] >= upper[j] {
                return Err(CoreError::InvalidParameter(format!(
                    "search space needs lower < upper at coordinate {j}: {} >= {}",
                    lower[j], upper[j]
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// A box with identical bounds `[lo, hi]` in every coordinate.
    pub fn uniform_box(dimension: usize, lo: T, hi: T) -> Result<Self, CoreError> {
        Self::new(
            Array1::from_elem(dimension, lo),
            Array1::from_elem(dimension, hi),
        )
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &Array1<T> {
        &self.lower
    }

    pub fn upper(&self) -> &Array1<T> {
        &self.upper
    }

    pub fn contains(&self, x: &ArrayView1<T>) -> bool {
        x.len() == self.lower.len()
            && x.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .all(|(&v, (&lo, &hi))| v >= lo && v <= hi)
    }

    /// Repairs one coordinate by reflecting it into the box, clamping if it
    /// keeps escaping or is non-finite.
    fn repair_coordinate(&self, j: usize, mut x: T) -> T {
        let (lo, hi) = (self.lower[j], self.upper[j]);
        if x.is_finite() {
            for _ in 0..REFLECT_LIMIT {
                if x < lo {
                    x = lo + lo - x;
                } else if x > hi {
                    x = hi + hi - x;
                } else {
                    return x;
                }
            }
        }
        // num-traits max/min return the other operand on NaN, so a non-finite
        // coordinate deterministically lands on a bound.
        x.max(lo).min(hi)
    }

    /// Reflect-then-clamp repair of a whole vector into the box.
    pub fn repair(&self, mut x: Array1<T>) -> Array1<T> {
        for j in 0..x.len() {
            x[j] = self.repair_coordinate(j, x[j]);
        }
        x
    }
}

/// One target vector's stochastic control draw.
#[derive(Debug, Clone, Copy)]
pub struct StrategyParams<T: Float> {
    /// Difference-vector scale, used exactly as sampled (may leave (0, 1)).
    pub f: T,
    /// Crossover rate, resampled until it lies in `[0, 1]`.
    pub cr: T,
    /// Current-to-rand coupling, fixed at 0.5.
    pub k: T,
    /// Mutation strategy, 1 through 4.
    pub strategy_id: u8,
}

impl<T: Float> StrategyParams<T> {
    /// Draws `F`, then `CR`, then the strategy id from `rng`.
    ///
    /// The draw order is part of the determinism contract: one normal draw
    /// for `F`, normal draws for `CR` until one lands in `[0, 1]`, then one
    /// uniform integer draw for the strategy.
    pub fn draw<R: Rng>(rng: &mut R) -> Self {
        let f_dist = Normal::new(0.5f64, 0.3).expect("valid normal");
        let cr_dist = Normal::new(0.5f64, 0.1).expect("valid normal");
        let f = f_dist.sample(rng);
        let cr = loop {
            let draw = cr_dist.sample(rng);
            if (0.0..=1.0).contains(&draw) {
                break draw;
            }
        };
        let strategy_id = rng.gen_range(1..=4u8);
        Self {
            f: T::of(f),
            cr: T::of(cr),
            k: T::of(STRATEGY4_K),
            strategy_id,
        }
    }

    /// How many mutually exclusive random indices the strategy consumes.
    pub fn index_count(&self) -> usize {
        match self.strategy_id {
            1 | 4 => 3,
            2 => 4,
            3 => 5,
            _ => unreachable!("strategy id is 1..=4"),
        }
    }
}

/// Draws `count` mutually distinct indices from `0..np`, all different from
/// `exclude`, by rejection from the run RNG.
pub fn draw_distinct<R: Rng>(rng: &mut R, np: usize, count: usize, exclude: usize) -> Vec<usize> {
    debug_assert!(count + 1 <= np, "not enough population members");
    let mut picks = Vec::with_capacity(count);
    while picks.len() < count {
        let r = rng.gen_range(0..np);
        if r != exclude && !picks.contains(&r) {
            picks.push(r);
        }
    }
    picks
}

/// Donor vector from the selected strategy's formula.
///
/// `picks` lists the mutually exclusive random indices in draw order; the
/// slice must hold `params.index_count()` entries. Strategies:
///
/// 1. `X_r1 + F (X_r2 - X_r3)`
/// 2. `X_i + F (X_best - X_i) + F (X_r1 - X_r2) + F (X_r3 - X_r4)`
/// 3. `X_r1 + F (X_r2 - X_r3) + F (X_r4 - X_r5)`
/// 4. `X_i + K (X_r1 - X_i) + F (X_r2 - X_r3)`, no crossover afterwards
pub fn donor<T: Float>(
    vectors: &Array2<T>,
    i: usize,
    best_index: usize,
    picks: &[usize],
    params: &StrategyParams<T>,
) -> Array1<T> {
    debug_assert_eq!(picks.len(), params.index_count());
    let row = |r: usize| vectors.row(r);
    let f = params.f;
    let d = vectors.ncols();
    let mut v = Array1::zeros(d);
    match params.strategy_id {
        1 => {
            let (r1, r2, r3) = (row(picks[0]), row(picks[1]), row(picks[2]));
            for j in 0..d {
                v[j] = r1[j] + f * (r2[j] - r3[j]);
            }
        }
        2 => {
            let xi = row(i);
            let best = row(best_index);
            let (r1, r2, r3, r4) = (row(picks[0]), row(picks[1]), row(picks[2]), row(picks[3]));
            for j in 0..d {
                v[j] = xi[j] + f * (best[j] - xi[j]) + f * (r1[j] - r2[j]) + f * (r3[j] - r4[j]);
            }
        }
        3 => {
            let (r1, r2, r3, r4, r5) = (
                row(picks[0]),
                row(picks[1]),
                row(picks[2]),
                row(picks[3]),
                row(picks[4]),
            );
            for j in 0..d {
                v[j] = r1[j] + f * (r2[j] - r3[j]) + f * (r4[j] - r5[j]);
            }
        }
        4 => {
            let xi = row(i);
            let (r1, r2, r3) = (row(picks[0]), row(picks[1]), row(picks[2]));
            for j in 0..d {
                v[j] = xi[j] + params.k * (r1[j] - xi[j]) + f * (r2[j] - r3[j]);
            }
        }
        _ => unreachable!("strategy id is 1..=4"),
    }
    v
}

/// Binomial crossover with one guaranteed donor coordinate.
///
/// Draws the forced coordinate first, then one uniform per coordinate,
/// copying the donor where the uniform is at most `cr` or at the forced
/// coordinate.
pub fn crossover<T: Float, R: Rng>(
    target: ArrayView1<T>,
    donor: ArrayView1<T>,
    cr: T,
    rng: &mut R,
) -> Array1<T> {
    debug_assert_eq!(target.len(), donor.len());
    let d = target.len();
    let j_rand = rng.gen_range(0..d);
    let mut trial = target.to_owned();
    for j in 0..d {
        let u = T::of(rng.gen::<f64>());
        if u <= cr || j == j_rand {
            trial[j] = donor[j];
        }
    }
    trial
}

/// Greedy maximization selection: keep the trial iff its fitness is equal or
/// higher. A non-finite trial fitness keeps the target and logs a warning.
pub fn select<T: Float>(target_fitness: T, trial_fitness: T) -> bool {
    if !trial_fitness.is_finite() {
        log::warn!("non-finite trial fitness {trial_fitness}; keeping target");
        return false;
    }
    if !target_fitness.is_finite() {
        log::warn!("replacing non-finite target fitness {target_fitness}");
        return true;
    }
    trial_fitness >= target_fitness
}

/// Population state: vectors, their fitness, and the run RNG.
#[derive(Debug, Clone)]
pub struct Population<T: Float> {
    vectors: Array2<T>,
    fitness: Array1<T>,
    generation: usize,
    best_index: usize,
    rng_seed: u64,
    rng: ChaCha8Rng,
}

impl<T: Float> Population<T> {
    /// Fills the box uniformly at random and evaluates every member.
    ///
    /// Vectors are drawn row-major (member by member, coordinate by
    /// coordinate) as `lo + u (hi - lo)` with `u` uniform in `[0, 1)`.
    pub fn initialize<F>(
        space: &SearchSpace<T>,
        np: usize,
        seed: u64,
        objective: &mut F,
    ) -> Result<Self, CoreError>
    where
        F: FnMut(ArrayView1<T>) -> Result<T, CoreError>,
    {
        if np < 6 {
            return Err(CoreError::InvalidParameter(format!(
                "population size {np} too small: strategy 3 draws five distinct indices besides the target"
            )));
        }
        let d = space.dimension();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vectors = Array2::zeros((np, d));
        for i in 0..np {
            for j in 0..d {
                let u = T::of(rng.gen::<f64>());
                vectors[[i, j]] = space.lower[j] + u * (space.upper[j] - space.lower[j]);
            }
        }
        let mut fitness = Array1::zeros(np);
        for i in 0..np {
            fitness[i] = objective(vectors.row(i))
                .map_err(|e| e.in_context(format!("generation 0, vector {i}")))?;
        }
        let mut pop = Self {
            vectors,
            fitness,
            generation: 0,
            best_index: 0,
            rng_seed: seed,
            rng,
        };
        pop.rescan_best();
        Ok(pop)
    }

    pub fn vectors(&self) -> &Array2<T> {
        &self.vectors
    }

    pub fn fitness(&self) -> &Array1<T> {
        &self.fitness
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn best_index(&self) -> usize {
        self.best_index
    }

    pub fn best_fitness(&self) -> T {
        self.fitness[self.best_index]
    }

    pub fn best_vector(&self) -> Array1<T> {
        self.vectors.row(self.best_index).to_owned()
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn average_fitness(&self) -> T {
        self.fitness.sum() / T::of_usize(self.fitness.len())
    }

    /// First maximal index wins; non-finite entries never win.
    fn rescan_best(&mut self) {
        let mut best = 0usize;
        let mut value = T::neg_infinity();
        for (i, &f) in self.fitness.iter().enumerate() {
            if f.is_finite() && f > value {
                best = i;
                value = f;
            }
        }
        self.best_index = best;
    }

    /// Draws this target's params and indices, then forms the donor.
    pub fn mutate(&mut self, i: usize) -> (Array1<T>, StrategyParams<T>) {
        let params = StrategyParams::<T>::draw(&mut self.rng);
        let picks = draw_distinct(&mut self.rng, self.vectors.nrows(), params.index_count(), i);
        let v = donor(&self.vectors, i, self.best_index, &picks, &params);
        (v, params)
    }

    /// Runs one generation in place: exactly `NP` objective evaluations, one
    /// per trial, with greedy in-place selection and best refresh per vector.
    pub fn step<F>(&mut self, space: &SearchSpace<T>, objective: &mut F) -> Result<(), CoreError>
    where
        F: FnMut(ArrayView1<T>) -> Result<T, CoreError>,
    {
        let np = self.vectors.nrows();
        for i in 0..np {
            let (v, params) = self.mutate(i);
            let trial = if params.strategy_id <= 3 {
                crossover(self.vectors.row(i), v.view(), params.cr, &mut self.rng)
            } else {
                v
            };
            let trial = space.repair(trial);
            let trial_fitness = objective(trial.view()).map_err(|e| {
                e.in_context(format!("generation {}, vector {i}", self.generation + 1))
            })?;
            if select(self.fitness[i], trial_fitness) {
                self.vectors.row_mut(i).assign(&trial);
                self.fitness[i] = trial_fitness;
            }
            self.rescan_best();
        }
        self.generation += 1;
        Ok(())
    }
}

/// One generation's trace row.
#[derive(Debug, Clone)]
pub struct GenerationRecord<T: Float> {
    pub generation: usize,
    /// Maximum fitness in the population.
    pub best: T,
    /// Mean fitness over the population.
    pub average: T,
    pub best_vector: Array1<T>,
}

/// Result of a full optimization run.
#[derive(Debug, Clone)]
pub struct MsdeOutcome<T: Float> {
    pub best_vector: Array1<T>,
    pub best_fitness: T,
    /// Rows for generations `0..=g_max` (row 0 is the initial population).
    pub trace: Vec<GenerationRecord<T>>,
}

/// Runs mixed-strategy differential evolution to maximize `objective`.
///
/// Evaluates `NP` vectors at initialization and exactly `NP` trials per
/// generation; evaluation failures abort with generation and index context.
pub fn run_msde<T: Float, F>(
    mut objective: F,
    space: &SearchSpace<T>,
    np: usize,
    g_max: usize,
    seed: u64,
) -> Result<MsdeOutcome<T>, CoreError>
where
    F: FnMut(ArrayView1<T>) -> Result<T, CoreError>,
{
    let mut pop = Population::initialize(space, np, seed, &mut objective)?;
    let mut trace = Vec::with_capacity(g_max + 1);
    let record = |pop: &Population<T>| GenerationRecord {
        generation: pop.generation(),
        best: pop.best_fitness(),
        average: pop.average_fitness(),
        best_vector: pop.best_vector(),
    };
    trace.push(record(&pop));
    for _ in 0..g_max {
        pop.step(space, &mut objective)?;
        trace.push(record(&pop));
    }
    Ok(MsdeOutcome {
        best_vector: pop.best_vector(),
        best_fitness: pop.best_fitness(),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn ok<T: Float>(f: impl Fn(ArrayView1<T>) -> T) -> impl FnMut(ArrayView1<T>) -> Result<T, CoreError> {
        move |x| Ok(f(x))
    }

    #[test]
    fn search_space_rejects_bad_bounds() {
        assert!(SearchSpace::<f64>::new(array![0.0, 0.0], array![1.0, 0.0]).is_err());
        assert!(SearchSpace::<f64>::new(array![0.0], array![0.0]).is_err());
        assert!(SearchSpace::<f64>::new(Array1::zeros(0), Array1::zeros(0)).is_err());
        assert!(SearchSpace::<f64>::new(array![0.0], array![f64::INFINITY]).is_err());
        assert!(SearchSpace::<f64>::uniform_box(3, 0.0, 1.0).is_ok());
    }

    #[test]
    fn repair_reflects_then_clamps() {
        let space = SearchSpace::<f64>::uniform_box(1, 1.0, 3.0).unwrap();
        // One bounce off each wall.
        assert_eq!(space.repair(array![0.5])[0], 1.5);
        assert_eq!(space.repair(array![3.5])[0], 2.5);
        // Two bounces: 5.2 -> 0.8 -> 1.2.
        assert_eq!(space.repair(array![5.2])[0], 1.2000000000000002);
        // In-box points are untouched.
        assert_eq!(space.repair(array![2.0])[0], 2.0);
        // Non-finite coordinates land on a bound.
        let fixed = space.repair(array![f64::NAN]);
        assert!(fixed[0] >= 1.0 && fixed[0] <= 3.0);
        let far = space.repair(array![1e300]);
        assert!((1.0..=3.0).contains(&far[0]));
    }

    #[test]
    fn strategy_one_matches_direct_arithmetic() {
        let vectors = array![[1.0, 2.0], [3.0, 4.0], [1.0, 0.0]];
        let params = StrategyParams {
            f: 0.5,
            cr: 0.5,
            k: 0.5,
            strategy_id: 1,
        };
        let v = donor(&vectors, 0, 0, &[0, 1, 2], &params);
        assert_eq!(v, array![2.0, 4.0]);
    }

    #[test]
    fn strategy_four_with_coincident_vectors_returns_target() {
        // X_i = X_r1 and X_r2 = X_r3 make both difference terms vanish.
        let vectors = array![[2.0, -1.0], [2.0, -1.0], [5.0, 7.0], [5.0, 7.0]];
        let params = StrategyParams {
            f: 0.9,
            cr: 0.5,
            k: 0.5,
            strategy_id: 4,
        };
        let v = donor(&vectors, 0, 0, &[1, 2, 3], &params);
        assert_eq!(v, array![2.0, -1.0]);
    }

    #[test]
    fn strategy_two_with_best_at_target_and_paired_picks_returns_target() {
        let vectors = array![[1.0, 1.0], [4.0, 2.0], [4.0, 2.0], [0.0, 9.0], [0.0, 9.0]];
        let params = StrategyParams {
            f: 1.3,
            cr: 0.5,
            k: 0.5,
            strategy_id: 2,
        };
        let v = donor(&vectors, 0, 0, &[1, 2, 3, 4], &params);
        assert_eq!(v, array![1.0, 1.0]);
    }

    #[test]
    fn strategy_three_sums_two_scaled_differences() {
        let vectors = array![
            [0.0, 0.0],
            [1.0, 1.0],
            [2.0, 0.0],
            [0.0, 2.0],
            [4.0, 4.0],
            [2.0, 2.0]
        ];
        let params = StrategyParams {
            f: 0.5,
            cr: 0.5,
            k: 0.5,
            strategy_id: 3,
        };
        // V = X1 + 0.5 (X2 - X3) + 0.5 (X4 - X5) = [1,1] + [1,-1] + [1,1].
        let v = donor(&vectors, 0, 0, &[1, 2, 3, 4, 5], &params);
        assert_eq!(v, array![3.0, 1.0]);
    }

    #[test]
    fn crossover_extremes_follow_the_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let target = array![0.0, 0.0, 0.0, 0.0];
        let donor_v = array![1.0, 1.0, 1.0, 1.0];
        let all = crossover(target.view(), donor_v.view(), 1.0, &mut rng);
        assert_eq!(all, donor_v);
        for _ in 0..50 {
            let one = crossover(target.view(), donor_v.view(), 0.0, &mut rng);
            let donors = one.iter().filter(|&&x| x == 1.0).count();
            assert_eq!(donors, 1, "CR = 0 must pass exactly the forced coordinate");
        }
        for _ in 0..50 {
            let mix = crossover(target.view(), donor_v.view(), 0.5, &mut rng);
            assert!(mix.iter().all(|&x| x == 0.0 || x == 1.0));
            assert!(mix.iter().any(|&x| x == 1.0), "at least the forced coordinate");
        }
    }

    #[test]
    fn selection_is_greedy_with_tie_acceptance() {
        assert!(select(3.0, 5.0));
        assert!(select(5.0, 5.0));
        assert!(!select(5.0, 3.0));
        assert!(!select(5.0, f64::NAN));
        // Infinite fitness is treated as a failed measurement, not a win.
        assert!(!select(5.0, f64::INFINITY));
        assert!(select(f64::NAN, 3.0));
    }

    #[test]
    fn initialization_fills_the_box_and_rejects_small_populations() {
        let space = SearchSpace::<f64>::uniform_box(80, 0.0, std::f64::consts::TAU).unwrap();
        let mut obj = ok(|x: ArrayView1<f64>| x.sum());
        let pop = Population::initialize(&space, 30, 11, &mut obj).unwrap();
        assert_eq!(pop.vectors().nrows(), 30);
        assert_eq!(pop.vectors().ncols(), 80);
        for row in pop.vectors().rows() {
            assert!(space.contains(&row));
        }
        assert!(Population::initialize(&space, 5, 11, &mut obj).is_err());
    }

    #[test]
    fn initialization_is_bitwise_deterministic() {
        let space = SearchSpace::<f64>::uniform_box(12, -2.0, 2.0).unwrap();
        let mut obj = ok(|x: ArrayView1<f64>| -x.dot(&x));
        let a = Population::initialize(&space, 10, 99, &mut obj).unwrap();
        let b = Population::initialize(&space, 10, 99, &mut obj).unwrap();
        assert_eq!(a.vectors(), b.vectors());
        assert_eq!(a.fitness(), b.fitness());
        assert_eq!(a.best_index(), b.best_index());
    }

    #[test]
    fn runs_are_bitwise_deterministic() {
        let space = SearchSpace::<f64>::uniform_box(6, -1.0, 1.0).unwrap();
        let run = || {
            run_msde(
                ok(|x: ArrayView1<f64>| -x.dot(&x)),
                &space,
                8,
                40,
                2024,
            )
            .unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.best_fitness, b.best_fitness);
        assert_eq!(a.best_vector, b.best_vector);
        assert_eq!(a.trace.len(), b.trace.len());
        for (ra, rb) in a.trace.iter().zip(b.trace.iter()) {
            assert_eq!(ra.best, rb.best);
            assert_eq!(ra.average, rb.average);
            assert_eq!(ra.best_vector, rb.best_vector);
        }
    }

    #[test]
    fn best_fitness_never_decreases() {
        let space = SearchSpace::<f64>::uniform_box(5, -4.0, 4.0).unwrap();
        let out = run_msde(
            ok(|x: ArrayView1<f64>| (x[0] - 1.0).sin() - x.dot(&x) / 7.0),
            &space,
            9,
            60,
            5,
        )
        .unwrap();
        for pair in out.trace.windows(2) {
            assert!(pair[1].best >= pair[0].best);
        }
        assert_eq!(out.trace.len(), 61);
    }

    #[test]
    fn every_generation_spends_exactly_np_evaluations() {
        let space = SearchSpace::<f64>::uniform_box(4, 0.0, 1.0).unwrap();
        let mut count = 0usize;
        let out = run_msde(
            |x: ArrayView1<f64>| {
                count += 1;
                Ok(x.sum())
            },
            &space,
            7,
            13,
            3,
        )
        .unwrap();
        assert_eq!(count, 7 * 14);
        assert_eq!(out.trace.last().unwrap().generation, 13);
    }

    #[test]
    fn population_members_stay_in_the_box() {
        let space = SearchSpace::<f64>::uniform_box(3, 0.0, std::f64::consts::FRAC_PI_4).unwrap();
        let mut obj = ok(|x: ArrayView1<f64>| x.iter().map(|v| v.cos()).sum::<f64>());
        let mut pop = Population::initialize(&space, 8, 17, &mut obj).unwrap();
        for _ in 0..25 {
            pop.step(&space, &mut obj).unwrap();
            for row in pop.vectors().rows() {
                assert!(space.contains(&row));
            }
        }
    }

    #[test]
    fn evaluation_failures_carry_generation_and_index_context() {
        let space = SearchSpace::<f64>::uniform_box(2, 0.0, 1.0).unwrap();
        let mut calls = 0usize;
        let err = run_msde(
            |x: ArrayView1<f64>| {
                calls += 1;
                if calls > 10 {
                    Err(CoreError::NonFinite("synthetic failure".into()))
                } else {
                    Ok(x.sum())
                }
            },
            &space,
            6,
            5,
            1,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("generation 1"), "context missing: {msg}");
        assert!(msg.contains("vector 4"), "context missing: {msg}");
    }

    #[test]
    fn non_finite_trial_fitness_keeps_the_target() {
        let space = SearchSpace::<f64>::uniform_box(2, 0.0, 1.0).unwrap();
        let mut calls = 0usize;
        let out = run_msde(
            |x: ArrayView1<f64>| {
                calls += 1;
                // Every third trial evaluation reports NaN.
                if calls > 6 && calls % 3 == 0 {
                    Ok(f64::NAN)
                } else {
                    Ok(x.sum())
                }
            },
            &space,
            6,
            8,
            12,
        )
        .unwrap();
        assert!(out.best_fitness.is_finite());
        for r in &out.trace {
            assert!(r.best.is_finite());
        }
    }

    #[test]
    fn constant_objective_accepts_every_trial() {
        let space = SearchSpace::<f64>::uniform_box(3, 0.0, 1.0).unwrap();
        let mut obj = ok(|_: ArrayView1<f64>| 1.25);
        let mut pop = Population::initialize(&space, 6, 4, &mut obj).unwrap();
        let before = pop.vectors().clone();
        pop.step(&space, &mut obj).unwrap();
        // Ties go to the trial, so essentially every row moves.
        let moved = (0..6)
            .filter(|&i| pop.vectors().row(i) != before.row(i))
            .count();
        assert!(moved >= 5, "only {moved} rows moved under an all-tie objective");
        assert_eq!(pop.best_fitness(), 1.25);
    }

    #[test]
    fn control_parameter_statistics_match_their_distributions() {
        let mut rng = ChaCha8Rng::seed_from_u64(31_415);
        let n = 100_000usize;
        let mut cr_sum = 0.0f64;
        let mut cr_sq = 0.0f64;
        let mut strategy_counts = [0usize; 4];
        for _ in 0..n {
            let p = StrategyParams::<f64>::draw(&mut rng);
            assert!((0.0..=1.0).contains(&p.cr));
            cr_sum += p.cr;
            cr_sq += p.cr * p.cr;
            strategy_counts[(p.strategy_id - 1) as usize] += 1;
        }
        let mean = cr_sum / n as f64;
        let std = (cr_sq / n as f64 - mean * mean).sqrt();
        assert!((mean - 0.5).abs() < 0.01, "CR mean {mean}");
        assert!((std - 0.1).abs() < 0.01, "CR std {std}");
        for (s, &c) in strategy_counts.iter().enumerate() {
            let freq = c as f64 / n as f64;
            assert!(
                (freq - 0.25).abs() < 0.01,
                "strategy {} frequency {freq}",
                s + 1
            );
        }
    }

    #[test]
    fn drawn_indices_are_mutually_exclusive() {
        let mut rng = ChaCha8Rng::seed_from_u64(271);
        for round in 0..100_000usize {
            let i = round % 8;
            let picks = draw_distinct(&mut rng, 8, 5, i);
            assert!(!picks.contains(&i));
            let mut sorted = picks.clone();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), 5);
        }
    }

    #[test]
    fn small_sphere_run_improves_substantially() {
        let space = SearchSpace::<f64>::uniform_box(4, -5.0, 5.0).unwrap();
        let out = run_msde(
            ok(|x: ArrayView1<f64>| -x.dot(&x)),
            &space,
            12,
            80,
            8,
        )
        .unwrap();
        assert!(out.best_fitness > out.trace[0].best);
        assert!(out.best_fitness > -0.5, "best {}", out.best_fitness);
    }
}
