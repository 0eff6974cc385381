//! The invariant suite: one check per module property, on fixtures built
//! from the config's box, grid and tolerance.

use rand::Rng;
use rayon::prelude::*;
use varlex_core::conditions::{
    check_condition_f, fefferman_phong_thm11, fefferman_phong_thm12, quadratic_triple, ConditionFOptions, Thm11Params,
    Thm12Params, WeightPair,
};
use varlex_core::domain::{BoundingBox, CubeLattice, Grid, GridFunction, Point, Rect};
use varlex_core::exponent::{CombineMode, ExponentField, ExponentKind};
use varlex_core::gphi::{build_example_triple, default_conjugate_grid, ExampleFamily, GPhiFunction};
use varlex_core::maximal::{boundedness_probe, maximal, MaximalSpec};
use varlex_core::operators::{apply_commutator, Kernel};
use varlex_core::sampling::{random_test_function, TestFunctionShape};
use varlex_core::spaces::{duality_probe, indicator_norm, luxemburg_norm, modular};
use varlex_core::sparse::{disjoint_sum_ratio, dyadic_majorant, local_sum_bound_check, overlap_sum_ratio, random_disjoint_family};
use varlex_core::symbols::{
    lipschitz_seminorm, nested_gap_constant, oscillation_lemma_constant, seminorm_equivalence_check, CubeFunctional,
    PowerSymbol, PowerTerm,
};

use crate::config::at;
use crate::error::Result;
use crate::experiments::{class_d_check, stopping_check, stopping_families, Bounds, Context};
use crate::report::{Check, RunReport};

/// Cells per side of the coarse grid used by conjugate-based checks.
const CONJUGATE_CELLS: usize = 64;

fn two_sided(x: f64) -> f64 {
    x.max(1.0 / x)
}

/// The suite's variable exponent: the config's `p`, else an affine field in `[1.5, 3]`.
fn exponent(ctx: &Context) -> Result<ExponentField<f64>> {
    match &ctx.setup.p {
        Some(p) => Ok(p.clone()),
        None => at("exponents.p", ExponentField::affine_clamped([1.5, 0.5], 1.5, 1.5, 3.0, ctx.setup.bbox)),
    }
}

fn draws(ctx: &Context, grid: &Grid<f64>, lattice: &CubeLattice<f64>, stream: u64, count: usize) -> Vec<GridFunction<f64>> {
    let mut rng = ctx.rng(stream);
    (0..count).map(|_| random_test_function(grid, lattice, TestFunctionShape::default(), &mut rng)).collect()
}

fn coarse(ctx: &Context) -> Result<(Grid<f64>, CubeLattice<f64>)> {
    let bbox = ctx.setup.bbox;
    let cells = if bbox.dim() == 1 { CONJUGATE_CELLS } else { CONJUGATE_CELLS / 4 };
    let grid = at("domain", Grid::new(bbox, cells))?;
    let depth = (cells as f64).log2() as i32;
    Ok((grid, at("domain", CubeLattice::new(bbox, 0, depth))?))
}

type Group = fn(&Context, &Bounds) -> Result<Vec<Check>>;

pub fn run(ctx: &Context, bounds: &Bounds) -> Result<RunReport> {
    let mut report = RunReport::new("suite", &ctx.cfg.name, ctx.seed);
    let checks: Vec<Group> = vec![
        closed_form,
        unit_ball,
        homogeneity_triangle,
        holder,
        young,
        duality,
        indicator_products,
        exponents,
        maximal_checks,
        class_d,
        seminorms,
        majorant,
        stopping,
        disjoint_and_overlap,
        flatness,
        condition_f,
    ];
    for c in checks {
        for check in c(ctx, bounds)? {
            report.push(check);
        }
    }
    Ok(report)
}

/// Constant exponents: `‖χ_Q‖_p = |Q|^{1/p}` on 50 random cubes.
fn closed_form(ctx: &Context, _: &Bounds) -> Result<Vec<Check>> {
    let s = &ctx.setup;
    let r = s.bbox.rect();
    let mut rng = ctx.rng(1);
    let cubes: Vec<Rect<f64>> = (0..50)
        .map(|_| {
            let side = s.bbox.side() * 2f64.powf(-12.0 * rng.gen::<f64>());
            let mut lo = [0.0; 2];
            for a in 0..s.bbox.dim() {
                lo[a] = r.lo[a] + rng.gen::<f64>() * (s.bbox.side() - side);
            }
            Rect::cube(s.bbox.dim(), lo, side)
        })
        .collect();
    let mut ps = vec![1.5, 2.0, 3.0];
    if let Some(c) = s.p.as_ref().and_then(|p| p.as_constant()) {
        ps.push(c);
    }
    let mut worst = 0.0f64;
    for p in &ps {
        let phi = at("exponents.p", GPhiFunction::constant(*p, 0.0, s.bbox))?;
        for q in &cubes {
            let n = indicator_norm(&phi, &s.grid, q, ctx.tol())?;
            worst = worst.max((n / q.measure().powf(1.0 / p) - 1.0).abs());
        }
    }
    Ok(vec![Check::new("luxemburg_closed_form", "‖χ_Q‖_p = |Q|^{1/p} for constant p")
        .value("exponents", ps.len() as f64)
        .value("cubes", cubes.len() as f64)
        .value("max_relative_error", worst)
        .pass(worst <= 1e-8)])
}

/// `ρ(f/‖f‖) = 1`, and `‖f‖ ≤ 1 ⇔ ρ(f) ≤ 1` just inside and outside the unit sphere.
fn unit_ball(ctx: &Context, _: &Bounds) -> Result<Vec<Check>> {
    let s = &ctx.setup;
    let phi = at("exponents.p", GPhiFunction::power(exponent(ctx)?))?;
    let fs = draws(ctx, &s.grid, &s.lattice, 2, 20);
    let rows = fs
        .par_iter()
        .map(|f| {
            let n = luxemburg_norm(&phi, f, ctx.tol())?.value;
            let dev = (modular(&phi, &f.scale(1.0 / n))? - 1.0).abs();
            let inside = modular(&phi, &f.scale(1.0 / (n * 1.001)))? <= 1.0;
            let outside = modular(&phi, &f.scale(1.0 / (n * 0.999)))? > 1.0;
            Ok((dev, inside && outside))
        })
        .collect::<varlex_core::Result<Vec<_>>>()?;
    let dev = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let mismatches = rows.iter().filter(|r| !r.1).count();
    Ok(vec![Check::new("unit_ball", "‖f‖ ≤ 1 ⇔ ρ(f) ≤ 1")
        .value("functions", fs.len() as f64)
        .value("max_modular_deviation", dev)
        .value("mismatches", mismatches as f64)
        .pass(dev <= 1e-6 && mismatches == 0)])
}

fn homogeneity_triangle(ctx: &Context, _: &Bounds) -> Result<Vec<Check>> {
    let s = &ctx.setup;
    let phi = at("exponents.p", GPhiFunction::power(exponent(ctx)?))?;
    let fs = draws(ctx, &s.grid, &s.lattice, 3, 40);
    let mut rng = ctx.rng(4);
    let scales: Vec<f64> = (0..20).map(|_| 10f64.powf(rng.gen_range(-2.0..2.0))).collect();
    let tol = ctx.tol();
    let homog = (0..20)
        .into_par_iter()
        .map(|i| {
            let n = luxemburg_norm(&phi, &fs[i], tol)?.value;
            let nc = luxemburg_norm(&phi, &fs[i].scale(scales[i]), tol)?.value;
            Ok((nc / (scales[i] * n) - 1.0).abs())
        })
        .collect::<varlex_core::Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let excess = (0..20)
        .into_par_iter()
        .map(|i| {
            let (f, g) = (&fs[i], &fs[20 + i]);
            let sum = luxemburg_norm(&phi, &f.add(g)?, tol)?.value;
            Ok(sum - luxemburg_norm(&phi, f, tol)?.value - luxemburg_norm(&phi, g, tol)?.value)
        })
        .collect::<varlex_core::Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(vec![
        Check::new("homogeneity", "‖cf‖ = |c| ‖f‖")
            .value("max_relative_error", homog)
            .pass(homog <= 1e-9),
        Check::new("triangle", "‖f + g‖ ≤ ‖f‖ + ‖g‖")
            .value("max_excess", excess)
            .pass(excess <= 1e-9),
    ])
}

/// `∫|fg| ≤ 2‖f‖_p‖g‖_{p'}` and `∫|fg| ≤ 2‖f‖_Ψ‖g‖_{Ψ*}` on 500 random pairs each.
fn holder(ctx: &Context, _: &Bounds) -> Result<Vec<Check>> {
    let (grid, lattice) = coarse(ctx)?;
    let p = exponent(ctx)?;
    let pp = at("exponents.p", GPhiFunction::power(p.clone()))?;
    let pc = at("exponents.p", GPhiFunction::power(at("exponents.p", p.conjugate())?))?;
    let psi = at("exponents.p", GPhiFunction::new(p.clone(), ExponentField::nonnegative(ExponentKind::Constant(0.5), *p.bbox())?))?;
    let psi_star = psi.conjugate(default_conjugate_grid());
    let fs = draws(ctx, &grid, &lattice, 5, 1000);
    let tol = ctx.tol();
    let m = grid.cell_measure();
    let pairing = |f: &GridFunction<f64>, g: &GridFunction<f64>| -> f64 {
        f.values().iter().zip(g.values()).map(|(a, b)| (a * b).abs() * m).sum()
    };
    let ratios = (0..500)
        .into_par_iter()
        .map(|i| {
            let (f, g) = (&fs[i], &fs[500 + i]);
            let lhs = pairing(f, g);
            let plain = lhs / (luxemburg_norm(&pp, f, tol)?.value * luxemburg_norm(&pc, g, tol)?.value);
            let general = lhs / (luxemburg_norm(&psi, f, tol)?.value * luxemburg_norm(&psi_star, g, tol)?.value);
            Ok((plain, general))
        })
        .collect::<varlex_core::Result<Vec<(f64, f64)>>>()?;
    let plain = ratios.iter().map(|r| r.0).fold(0.0, f64::max);
    let general = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    let violations = ratios.iter().filter(|r| r.0 > 2.0 || r.1 > 2.0).count();
    Ok(vec![Check::new("holder", "∫|fg| ≤ 2 ‖f‖_Ψ ‖g‖_{Ψ*}")
        .value("pairs", ratios.len() as f64)
        .value("max_ratio_power", plain)
        .value("max_ratio_general", general)
        .value("violations", violations as f64)
        .pass(violations == 0)])
}

/// `φ(x,v) + φ*(x,u) − uv ≥ 0` on 10⁴ samples.
fn young(ctx: &Context, _: &Bounds) -> Result<Vec<Check>> {
    let s = &ctx.setup;
    let p = exponent(ctx)?;
    let psi = at("exponents.p", GPhiFunction::new(p.clone(), ExponentField::nonnegative(ExponentKind::Constant(0.5), *p.bbox())?))?;
    let t_grid = default_conjugate_grid::<f64>();
    let mut rng = ctx.rng(6);
    let samples: Vec<(Point<f64>, f64, f64)> = (0..10_000)
        .map(|_| {
            let x = s.grid.midpoint(rng.gen_range(0..s.grid.len()));
            (x, 10f64.powf(rng.gen_range(-3.0..3.0)), 10f64.powf(rng.gen_range(-3.0..3.0)))
        })
        .collect();
    let worst = samples
        .par_iter()
        .map(|(x, v, u)| psi.young_defect(x, *v, *u, &t_grid))
        .collect::<varlex_core::Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(vec![Check::new("young", "uv ≤ φ(x,v) + φ*(x,u)")
        .value("samples", samples.len() as f64)
        .value("min_defect", worst)
        .pass(worst >= -1e-9)])
}

/// `sup_g ∫fg` over the extremal and 10 random candidates lies in `[‖f‖/4, 2‖f‖]`;
/// the upper end is the sharp Hölder constant, so it gets bisection slack.
fn duality(ctx: &Context, _: &Bounds) -> Result<Vec<Check>> {
    let (grid, lattice) = coarse(ctx)?;
    let p = exponent(ctx)?;
    let psi = at("exponents.p", GPhiFunction::new(p.clone(), ExponentField::nonnegative(ExponentKind::Constant(0.5), *p.bbox())?))?;
    let fs = draws(ctx, &grid, &lattice, 7, 100);
    let ratios = fs
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let mut rng = ctx.rng(10_000 + i as u64);
            let probe = duality_probe(&psi, f, default_conjugate_grid(), 10, &mut rng, ctx.tol())?;
            Ok(probe.sup / probe.norm)
        })
        .collect::<varlex_core::Result<Vec<f64>>>()?;
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    Ok(vec![Check::new("duality", "‖f‖_Ψ ≃ sup{∫fg : ‖g‖_{Ψ*} ≤ 1}")
        .value("functions", ratios.len() as f64)
        .value("min_sup_over_norm", lo)
        .value("max_sup_over_norm", hi)
        .pass(lo >= 0.25 && hi <= 2.0 + 1e-6)])
}

fn product_range(p: &ExponentField<f64>, grid: &Grid<f64>, lattice: &CubeLattice<f64>, tol: f64) -> Result<(f64, f64)> {
    let a = at("exponents.p", GPhiFunction::power(p.clone()))?;
    let b = at("exponents.p", GPhiFunction::power(at("exponents.p", p.conjugate())?))?;
    let vals = lattice
        .all_cubes()
        .par_iter()
        .map(|c| {
            let r = c.rect();
            Ok(indicator_norm(&a, grid, &r, tol)? * indicator_norm(&b, grid, &r, tol)? / r.measure())
        })
        .collect::<varlex_core::Result<Vec<f64>>>()?;
    Ok(vals.iter().fold((f64::INFINITY, 0.0f64), |acc, v| (acc.0.min(*v), acc.1.max(*v))))
}

/// `‖χ_Q‖_p‖χ_Q‖_{p'}/|Q|` and `‖χ_Q‖_p/(‖χ_Q‖_q‖χ_Q‖_β)` within frozen two-sided bounds.
fn indicator_products(ctx: &Context, bounds: &Bounds) -> Result<Vec<Check>> {
    let s = &ctx.setup;
    let p = exponent(ctx)?;
    let (lo, hi) = product_range(&p, &s.grid, &s.lattice, ctx.tol())?;
    let fine = at("domain", Grid::new(s.bbox, s.grid.cells_per_side() * 2))?;
    let (lo2, hi2) = product_range(&p, &fine, &s.lattice, ctx.tol())?;
    let (c, c2) = (hi.max(1.0 / lo), hi2.max(1.0 / lo2));
    let bound = bounds.constant("pp_product", c);
    let drift = (c2 / c - 1.0).abs();

    let q = at("exponents.q", p.scale(2.0))?;
    let beta = at("exponents", p.combine(&q, CombineMode::Difference))?;
    let (fp, fq, fb) = (
        at("exponents.p", GPhiFunction::power(p.clone()))?,
        at("exponents.q", GPhiFunction::power(q))?,
        at("exponents", GPhiFunction::power(beta))?,
    );
    let tol = ctx.tol();
    let betas = s
        .lattice
        .all_cubes()
        .par_iter()
        .map(|c| {
            let r = c.rect();
            let v = indicator_norm(&fp, &s.grid, &r, tol)?
                / (indicator_norm(&fq, &s.grid, &r, tol)? * indicator_norm(&fb, &s.grid, &r, tol)?);
            Ok(two_sided(v))
        })
        .collect::<varlex_core::Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let beta_bound = bounds.constant("beta_equivalence", betas);
    Ok(vec![
        Check::new("pp_product", "1/C ≤ ‖χ_Q‖_p ‖χ_Q‖_{p'} / |Q| ≤ C")
            .value("min", lo)
            .value("max", hi)
            .value("doubled_grid_min", lo2)
            .value("doubled_grid_max", hi2)
            .value("relative_drift", drift)
            .value("bound", bound)
            .pass(c <= bound && c2 <= bound && drift <= 0.1),
        Check::new("beta_equivalence", "‖χ_Q‖_p ≃ ‖χ_Q‖_q ‖χ_Q‖_β, 1/β = 1/p − 1/q")
            .value("max_two_sided", betas)
            .value("bound", beta_bound)
            .pass(betas <= beta_bound),
    ])
}

/// Conjugation is an involution, constants are perfectly regular, and sums
/// and products of log-Hölder exponents stay log-Hölder.
fn exponents(ctx: &Context, bounds: &Bounds) -> Result<Vec<Check>> {
    let s = &ctx.setup;
    let p = exponent(ctx)?;
    let back = at("exponents.p", at("exponents.p", p.conjugate())?.conjugate())?;
    let involution = s.grid.midpoints().iter().map(|x| (back.value(x) - p.value(x)).abs()).fold(0.0, f64::max);
    let constant = at("exponents", ExponentField::constant(2.5, s.bbox))?.regularity(256);
    let zero = constant.local_logholder_constant + constant.at_infinity_constant + constant.loglog_constant;
    let other = at("exponents", ExponentField::log_smooth(2.0, 0.4, s.bbox.center(), s.bbox))?;
    let mut worst = 0.0f64;
    for mode in [CombineMode::Sum, CombineMode::Product] {
        let r = at("exponents", p.combine(&other, mode))?.regularity(2_000);
        worst = worst.max(r.local_logholder_constant);
    }
    let bound = bounds.constant("combined_regularity", worst);
    Ok(vec![
        Check::new("conjugate_involution", "(p')' = p")
            .value("max_error", involution)
            .pass(involution <= 1e-12),
        Check::new("constant_regularity", "constant exponents have zero regularity constants")
            .value("sum", zero)
            .pass(zero == 0.0),
        Check::new("combined_regularity", "p, q ∈ P^log ⇒ p·q and (1/p + 1/q)⁻¹ ∈ P^log")
            .value("max_logholder", worst)
            .value("bound", bound)
            .pass(worst.is_finite() && worst <= bound),
    ])
}

fn maximal_checks(ctx: &Context, bounds: &Bounds) -> Result<Vec<Check>> {
    let (grid, lattice) = coarse(ctx)?;
    let spec = MaximalSpec::hardy_littlewood(lattice);
    let fs = draws(ctx, &grid, &lattice, 8, 20);
    let mut monotone = true;
    let mut sublinear = 0.0f64;
    for pair in fs.chunks(2) {
        let (f, g) = (&pair[0], &pair[1]);
        let fg = f.add(g)?;
        let (mf, mg, mfg) = (maximal(&spec, f)?, maximal(&spec, g)?, maximal(&spec, &fg)?);
        monotone &= mf.values().iter().zip(mfg.values()).all(|(a, b)| a <= b);
        for i in 0..grid.len() {
            sublinear = sublinear.max(mfg.value(i) - mf.value(i) - mg.value(i));
        }
    }
    let finer = MaximalSpec::hardy_littlewood(lattice.with_levels(lattice.j_min, lattice.j_max + 2));
    let mut refinement = true;
    for f in &fs[..5] {
        let (a, b) = (maximal(&spec, f)?, maximal(&finer, f)?);
        refinement &= a.values().iter().zip(b.values()).all(|(x, y)| x <= y);
    }
    let chi = GridFunction::indicator(grid, &lattice.level_cubes(2)[0].rect());
    let mchi = maximal(&spec, &chi)?;
    let in_unit = mchi.values().iter().all(|v| (0.0..=1.0).contains(v));
    let two = at("exponents", ExponentField::constant(2.0, *grid.bbox()))?;
    let probe = boundedness_probe(&spec, &grid, &two, &two, 50, ctx.seed)?;
    let bound = bounds.constant("maximal_probe", probe.max_ratio);
    Ok(vec![
        Check::new("maximal_order", "0 ≤ f ≤ g ⇒ Mf ≤ Mg; M(f+g) ≤ Mf + Mg")
            .value("monotone", monotone as u8 as f64)
            .value("max_sublinearity_excess", sublinear)
            .pass(monotone && sublinear <= 1e-12),
        Check::new("maximal_refinement", "more lattice levels never lower Mf")
            .value("monotone", refinement as u8 as f64)
            .pass(refinement),
        Check::new("maximal_indicator", "0 ≤ Mχ_E ≤ 1")
            .value("in_unit_interval", in_unit as u8 as f64)
            .pass(in_unit),
        Check::new("maximal_probe", "‖Mf‖_2 ≤ C ‖f‖_2")
            .value("max_ratio", probe.max_ratio)
            .value("bound", bound)
            .pass(probe.max_ratio <= bound),
    ])
}

fn class_d(_: &Context, _: &Bounds) -> Result<Vec<Check>> {
    let range = (-10, 10);
    let fractional = Kernel::fractional(0.5, 1)?.check_class_d(1.0, 0.0, range)?;
    let step = Kernel::dyadic_step(0.5, 1)?.check_class_d(1.0, 0.0, range)?;
    // One thin annulus of mass, nothing on the comparison annulus at δ = 4.
    let spike = Kernel::tabulated(vec![2.0, 2.0001, 3.9999, 4.0], vec![0.0, 1.0, 1.0, 0.0], 1)?;
    let spike = spike.check_class_d(4.0, 0.0, range)?;
    Ok(vec![
        class_d_check("class_d_fractional", &fractional, true),
        class_d_check("class_d_dyadic_step", &step, true),
        class_d_check("class_d_spike_fails", &spike, false),
    ])
}

fn seminorms(ctx: &Context, bounds: &Bounds) -> Result<Vec<Check>> {
    let s = &ctx.setup;
    let tol = ctx.tol();
    let one = CubeFunctional::ConstantOne;
    let b = GridFunction::from_fn(s.grid, |x| x[0]);
    let (hi, lo) = seminorm_equivalence_check(&b, &one, 2.0, &s.lattice, tol)?;
    let ratio = hi / lo;
    let eq_bound = bounds.constant("seminorm_equivalence", ratio);

    let rough = PowerSymbol::single(s.bbox.dim(), 1.0, s.bbox.center(), 0.5)?.sample(&s.grid);
    let power = CubeFunctional::power(0.5)?;
    let base = lipschitz_seminorm(&rough, &power, 1.0, &s.lattice, tol)?;
    let shifted = lipschitz_seminorm(&rough.add_constant(3.0), &power, 1.0, &s.lattice, tol)?;
    let scaled = lipschitz_seminorm(&rough.scale(-2.5), &power, 1.0, &s.lattice, tol)?;
    let shift_err = (shifted.seminorm - base.seminorm).abs() / base.seminorm;
    let scale_err = (scaled.seminorm / (2.5 * base.seminorm) - 1.0).abs();

    let p = exponent(ctx)?;
    let osc = at("exponents.p", oscillation_lemma_constant(&rough, &p, &one, 1, &s.lattice, tol))?;
    let osc_bound = bounds.constant("oscillation", osc);
    let (gap, _) = nested_gap_constant(&rough, &power, &s.lattice, tol)?;
    let gap_bound = bounds.constant("nested_gap", gap);
    Ok(vec![
        Check::new("seminorm_equivalence", "‖b‖_{L^1_a} ≤ ‖b‖_{L^ϱ_a} ≤ C ‖b‖_{L^1_a}")
            .value("rho_2", hi)
            .value("rho_1", lo)
            .value("bound", eq_bound)
            .pass(hi >= lo * (1.0 - 1e-12) && ratio <= eq_bound),
        Check::new("seminorm_invariance", "‖b + c‖ = ‖b‖, ‖cb‖ = |c| ‖b‖")
            .value("shift_error", shift_err)
            .value("scale_error", scale_err)
            .value("t_infinity", base.t_infinity)
            .pass(shift_err <= 1e-12 && scale_err <= 1e-12 && base.t_infinity >= 1.0),
        Check::new("oscillation", "‖χ_Q(b − b_Q)‖_p/‖χ_Q‖_p ≤ C a(Q) ‖b‖_{L^1_a}")
            .value("constant", osc)
            .value("bound", osc_bound)
            .pass(osc <= osc_bound),
        Check::new("nested_gap", "|b_{3Q} − b_Q| ≤ C ‖a‖_{t_∞} a(3Q) ‖b‖_{L^1_a}")
            .value("constant", gap)
            .value("bound", gap_bound)
            .pass(gap <= gap_bound),
    ])
}

/// `|T^{b,m}f| ≤` dyadic majorant + slack on 20 random `(b, m, f)`.
fn majorant(ctx: &Context, _: &Bounds) -> Result<Vec<Check>> {
    let bbox = ctx.setup.bbox;
    let dim = bbox.dim();
    let cells = if dim == 1 { 128 } else { 16 };
    let grid = at("domain", Grid::new(bbox, cells))?;
    let j_min = -(bbox.diameter().log2().ceil() as i32);
    let j_max = (cells as f64 / bbox.side()).log2().ceil() as i32;
    let lattice = at("domain", CubeLattice::new(bbox, j_min, j_max))?;
    let draw_lattice = at("domain", CubeLattice::new(bbox, 0, j_max))?;
    let kernel = Kernel::fractional(0.5, dim)?;
    let configs = ctx.cfg.verification.majorant_configs;
    let mut rng = ctx.rng(9);
    let cases: Vec<(GridFunction<f64>, u32, GridFunction<f64>)> = (0..configs)
        .map(|i| {
            let r = bbox.rect();
            let terms = (0..rng.gen_range(1..=2))
                .map(|_| {
                    let mut center = [0.0; 2];
                    for a in 0..dim {
                        center[a] = rng.gen_range(r.lo[a]..r.hi[a]);
                    }
                    PowerTerm { coefficient: rng.gen_range(-2.0..2.0), center, exponent: rng.gen_range(0.2..1.0) }
                })
                .collect();
            let b = PowerSymbol::new(dim, 0.0, terms)?.sample(&grid);
            let f = random_test_function(&grid, &draw_lattice, TestFunctionShape::default(), &mut rng);
            Ok((b, (i % 3) as u32, f))
        })
        .collect::<varlex_core::Result<_>>()?;
    let counts = cases
        .par_iter()
        .map(|(b, m, f)| {
            let t = apply_commutator(&kernel, b, *m, f)?;
            let maj = dyadic_majorant(&kernel, b, *m, f, &lattice)?;
            Ok(maj.violations(&t).len())
        })
        .collect::<varlex_core::Result<Vec<usize>>>()?;
    let total: usize = counts.iter().sum();
    Ok(vec![Check::new(
        "majorant",
        "|T^{b,m}f(x)| ≤ Σ_Q K̄(ℓ(Q)/2) Σ_j C(m,j)|b(x) − b_Q|^{m−j} χ_Q(x) ∫_{3Q}|b − b_Q|^j f",
    )
    .value("configs", cases.len() as f64)
    .value("violations", total as f64)
    .pass(total == 0)])
}

fn stopping(ctx: &Context, _: &Bounds) -> Result<Vec<Check>> {
    Ok(vec![stopping_check(&stopping_families(ctx)?)])
}

fn disjoint_and_overlap(ctx: &Context, bounds: &Bounds) -> Result<Vec<Check>> {
    let s = &ctx.setup;
    let p = exponent(ctx)?;
    let tol = ctx.tol();
    let fs = draws(ctx, &s.grid, &s.lattice, 11, 40);
    let disjoint = (0..20)
        .into_par_iter()
        .map(|i| {
            let family: Vec<Rect<f64>> =
                random_disjoint_family(&s.lattice, 64, ctx.seed.wrapping_add(i as u64)).iter().map(|q| q.rect()).collect();
            disjoint_sum_ratio(&p, &fs[i], &fs[20 + i], &family, tol)
        })
        .collect::<varlex_core::Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let disjoint_bound = bounds.constant("disjoint_sum", disjoint);

    // Q₀ one level below the box, so 3Q₀ stays near the box.
    let q0 = s.lattice.level_cubes(s.lattice.j_min + 1)[0];
    let by_depth = (1..=6u32)
        .into_par_iter()
        .map(|d| overlap_sum_ratio(&p, &fs[0], &fs[1], &q0, d, tol))
        .collect::<varlex_core::Result<Vec<f64>>>()?;
    let overlap = by_depth.iter().copied().fold(0.0, f64::max);
    let overlap_bound = bounds.constant("overlap_sum", overlap);

    let kernel = Kernel::fractional(0.5, s.bbox.dim())?;
    let local = s
        .lattice
        .level_cubes(s.lattice.j_min + 1)
        .par_iter()
        .take(4)
        .map(|q| {
            let (lhs, rhs, _) = local_sum_bound_check(&kernel, &fs[2], &p, q, &s.lattice, (1.0, 0.0), tol)?;
            Ok(if rhs > 0.0 { lhs / rhs } else { 0.0 })
        })
        .collect::<varlex_core::Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let local_bound = bounds.constant("local_sum", local);
    let mut overlap_check = Check::new("overlap_sum", "Σ_{ℓ(Q) = 2^{−d}ℓ(Q₀)} ‖fχ_{3Q}‖_ω‖gχ_{3Q}‖_{ω'} ≤ C ‖fχ_{3Q₀}‖_ω‖gχ_{3Q₀}‖_{ω'}, C free of d");
    for (d, v) in by_depth.iter().enumerate() {
        overlap_check = overlap_check.value(format!("depth_{}", d + 1), *v);
    }
    Ok(vec![
        Check::new("disjoint_sum", "Σ_Q ‖χ_Q f‖_p ‖χ_Q g‖_{p'} ≤ G_p ‖f‖_p ‖g‖_{p'}")
            .value("max_ratio", disjoint)
            .value("bound", disjoint_bound)
            .pass(disjoint <= disjoint_bound),
        overlap_check.value("bound", overlap_bound).pass(overlap <= overlap_bound),
        Check::new("local_sum", "Σ_{Q⊆Q₀} K̄(ℓ(Q)/2)|3Q||Q| ‖χ_{3Q}f‖_ω/‖χ_{3Q}‖_ω ≤ C_K K̃(δ(1+ε)ℓ(Q₀))|3Q₀| ‖χ_{3Q₀}f‖_ω/‖χ_{3Q₀}‖_ω")
            .value("max_ratio", local)
            .value("bound", local_bound)
            .pass(local <= local_bound),
    ])
}

fn profile_spread(profile: &[(i32, f64)]) -> f64 {
    let (lo, hi) = profile.iter().fold((f64::INFINITY, 0.0f64), |a, e| (a.0.min(e.1), a.1.max(e.1)));
    hi / lo
}

/// Constant `p < q` matched to the kernel is flat across ten levels; `q = p` is not.
fn flatness(_: &Context, _: &Bounds) -> Result<Vec<Check>> {
    let bbox = BoundingBox::unit(1)?;
    let grid = Grid::new(bbox, 1024)?;
    let lattice = CubeLattice::new(bbox, 0, 9)?;
    let kernel = Kernel::fractional(0.25, 1)?;
    let p = ExponentField::constant(2.0, bbox)?;
    let q = ExponentField::constant(4.0, bbox)?;
    let unit = WeightPair::unit(grid);
    let one = CubeFunctional::ConstantOne;
    let run = |q: &ExponentField<f64>| {
        fefferman_phong_thm11(&Thm11Params { p: &p, q, r: 2.0, s: 2.0, a: &one, m: 0, kernel: &kernel }, &unit, &lattice, 1e-12)
    };
    let flat = run(&q)?.level_profile();
    let grow = run(&p)?.level_profile();
    let spread = profile_spread(&flat);
    let monotone = grow.windows(2).all(|w| w[0].1 > w[1].1);
    Ok(vec![
        Check::new("fp_flatness", "1/q = 1/p − α/n ⇒ per-level functional flat")
            .value("levels", flat.len() as f64)
            .value("spread", spread)
            .pass(flat.len() >= 10 && spread < 1.2),
        Check::new("fp_equal_exponents_grow", "q = p ⇒ functional grows with ℓ(Q)")
            .value("levels", grow.len() as f64)
            .value("spread", profile_spread(&grow))
            .pass(monotone),
    ])
}

fn condition_f(_: &Context, _: &Bounds) -> Result<Vec<Check>> {
    let bbox = BoundingBox::unit(1)?;
    let grid = Grid::new(bbox, 256)?;
    let lattice = CubeLattice::new(bbox, 0, 5)?;
    let opts = ConditionFOptions::default();
    let p = ExponentField::constant(2.0, bbox)?;
    let (one, _) = build_example_triple(ExampleFamily::LogBump, &p, 2.0, None, None, 0.1)?;
    let mu = ExponentField::constant(3.0, bbox)?;
    let nu = ExponentField::nonnegative(ExponentKind::Constant(1.0), bbox)?;
    let (two, _) = build_example_triple(ExampleFamily::PowerBump, &p, 1.2, Some(&mu), Some(&nu), 0.05)?;
    let quad = quadratic_triple(&grid)?;
    let item = |name: &str, triple, expect: fn(&varlex_core::conditions::ConditionFReport<f64>) -> bool| {
        let r = check_condition_f(triple, &grid, &lattice, &opts)?;
        Ok::<_, varlex_core::Error>(
            Check::new(name, "‖χ_Q‖_A‖χ_Q‖_B ≤ C‖χ_Q‖_D; A⁻¹B⁻¹ ≤ C D⁻¹; ‖χ_Q‖_D‖χ_Q‖_{D*} ≤ C|Q|")
                .value("norms", r.norms.bound)
                .value("norms_refined", r.norms.refined)
                .value("inverses", r.inverses.bound)
                .value("inverses_refined", r.inverses.refined)
                .value("duality", r.duality.bound)
                .value("duality_refined", r.duality.refined)
                .pass(expect(&r)),
        )
    };
    let mut checks = vec![
        item("condition_f_example_1", &one, |r| r.pass())?,
        item("condition_f_example_2", &two, |r| r.pass())?,
        item("condition_f_quadratic_fails_inverses", &quad, |r| !r.inverses.pass)?,
    ];

    let pv = ExponentField::affine_clamped([0.5, 0.0], 1.8, 1.8, 2.3, bbox)?;
    let qv = ExponentField::affine_clamped([0.5, 0.0], 3.0, 3.0, 3.5, bbox)?;
    let kernel = Kernel::fractional(0.4, 1)?;
    let fine = Grid::new(bbox, 1024)?;
    let weights = WeightPair::new(
        varlex_core::conditions::power_weight(&fine, [-0.3, 0.0], 0.2)?,
        varlex_core::conditions::power_weight(&fine, [1.4, 0.0], 0.1)?,
    )?;
    let lat = CubeLattice::new(bbox, 0, 6)?;
    let a_phi = GPhiFunction::power(pv.conjugate()?.scale(2.0)?)?;
    let e_phi = GPhiFunction::power(qv.scale(2.0)?)?;
    let zero = ExponentField::nonnegative(ExponentKind::Constant(0.0), bbox)?;
    let first = fefferman_phong_thm11(
        &Thm11Params { p: &pv, q: &qv, r: 2.0, s: 2.0, a: &CubeFunctional::ConstantOne, m: 0, kernel: &kernel },
        &weights,
        &lat,
        1e-12,
    )?;
    let second = fefferman_phong_thm12(
        &Thm12Params { p: &pv, q: &qv, delta: &zero, m: 1, kernel: &kernel, a_phi: &a_phi, e_phi: &e_phi },
        &weights,
        &lat,
        1e-12,
    )?;
    let diff = first
        .rows
        .iter()
        .zip(&second.rows)
        .map(|(x, y)| (x.product / y.product - 1.0).abs())
        .fold(0.0, f64::max);
    checks.push(
        Check::new("thm12_matches_thm11", "power-only A, E reduce the second condition to the first")
            .value("cubes", first.rows.len() as f64)
            .value("max_relative_difference", diff)
            .pass(diff <= 1e-8 && first.rows.len() == second.rows.len()),
    );
    Ok(checks)
}
