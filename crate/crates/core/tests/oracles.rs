//! Independent-oracle tests: brute-force or closed-form recomputations that
//! never share a code path with the implementation they check.

use escape_lab_core::catalog::{FunctionSpec, ZeroRadiiRule};
use escape_lab_core::grid::{self, GridSpec, PixelClass};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn product_specs() -> Vec<FunctionSpec<f64>> {
    vec![
        FunctionSpec::CanonicalProduct {
            rho: 0.25,
            c: 1.0,
            truncation_tol: 1e-6,
        },
        FunctionSpec::CanonicalProduct {
            rho: 0.3,
            c: 2.5,
            truncation_tol: 1e-6,
        },
        FunctionSpec::GeneralProduct {
            c: 0.7,
            zero_radii_rule: ZeroRadiiRule {
                scale: 2.0,
                exponent: 3.5,
            },
            truncation_tol: 1e-6,
        },
    ]
}

#[test]
fn truncation_consistency_under_halved_tolerance() {
    // halving truncation_tol moves log|f| by less than the coarser bound,
    // on 100 random points per product function
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for spec in product_specs() {
        let (fine, coarse) = match spec {
            FunctionSpec::CanonicalProduct {
                rho,
                c,
                truncation_tol,
            } => (
                FunctionSpec::CanonicalProduct {
                    rho,
                    c,
                    truncation_tol: truncation_tol / 2.0,
                },
                spec,
            ),
            FunctionSpec::GeneralProduct {
                c,
                zero_radii_rule,
                truncation_tol,
            } => (
                FunctionSpec::GeneralProduct {
                    c,
                    zero_radii_rule,
                    truncation_tol: truncation_tol / 2.0,
                },
                spec,
            ),
            _ => unreachable!(),
        };
        for _ in 0..100 {
            let r = 10f64.powf(rng.random_range(-1.0..5.0));
            let theta = rng.random_range(-3.0..3.0);
            let z = Complex64::from_polar(r, theta);
            let a = coarse.evaluate(z).unwrap();
            let b = fine.evaluate(z).unwrap();
            // skip points essentially on a zero where log|f| is unstable
            if a.log_abs < -20.0 {
                continue;
            }
            assert!(
                (a.log_abs - b.log_abs).abs() <= a.trunc_bound + 1e-12 * a.log_abs.abs().max(1.0),
                "{}: z = {z}, delta = {}, bound = {}",
                coarse.kind_name(),
                (a.log_abs - b.log_abs).abs(),
                a.trunc_bound
            );
        }
    }
}

#[test]
fn log_derivative_matches_finite_differences() {
    // centered finite difference of the log-modulus on the positive axis
    let specs: Vec<FunctionSpec<f64>> = vec![
        FunctionSpec::FatouBaker,
        FunctionSpec::ScaledExp { lambda: 0.7 },
        FunctionSpec::QuarterCosh,
        FunctionSpec::CanonicalProduct {
            rho: 0.25,
            c: 1.0,
            truncation_tol: 1e-12,
        },
    ];
    for f in &specs {
        for &r in &[10.0, 1e3, 1e5] {
            let h = r * 1e-5;
            let up = f.evaluate_log_on_ray(r + h, 0.0).unwrap();
            let down = f.evaluate_log_on_ray(r - h, 0.0).unwrap();
            let fd = r * (up - down) / (2.0 * h);
            let exact = f.log_derivative_on_ray(r).unwrap();
            assert!(
                ((fd - exact) / exact).abs() < 1e-4,
                "{} at r = {r}: fd {fd} vs exact {exact}",
                f.kind_name()
            );
        }
    }
}

#[test]
fn quarter_cosh_agrees_with_its_canonical_product() {
    // the closed form is the genus-zero product over its own zeros; summing
    // the product with the generic engine must reproduce it
    let f = FunctionSpec::<f64>::QuarterCosh;
    let zeros = f.zeros().unwrap();
    for &r in &[5.0, 120.0, 9.5e3, 2.2e6] {
        let closed = f.evaluate_log_on_ray(r, 0.0).unwrap();
        let summed = zeros
            .log_abs_sum(r.ln(), 0.0, 1e-10, 10_000_000, false)
            .unwrap();
        assert!(
            (closed - summed.value).abs() <= summed.err + 1e-8 * closed.abs(),
            "r = {r}: closed {closed} vs product {}",
            summed.value
        );
    }
}

/// Independent flood-fill connectivity oracle (plain stack-based labelling).
fn brute_force_connectivity(nx: usize, ny: usize, escaping: &[bool]) -> (usize, usize, f64) {
    let mut label = vec![usize::MAX; nx * ny];
    let mut components = 0usize;
    let mut largest = 0usize;
    let mut total = 0usize;
    for start in 0..nx * ny {
        if !escaping[start] || label[start] != usize::MAX {
            continue;
        }
        components += 1;
        let mut size = 0usize;
        let mut stack = vec![start];
        label[start] = components;
        while let Some(idx) = stack.pop() {
            size += 1;
            let (i, j) = (idx / nx, idx % nx);
            for (ni, nj) in [
                (i.wrapping_sub(1), j),
                (i + 1, j),
                (i, j.wrapping_sub(1)),
                (i, j + 1),
            ] {
                if ni < ny && nj < nx {
                    let nidx = ni * nx + nj;
                    if escaping[nidx] && label[nidx] == usize::MAX {
                        label[nidx] = components;
                        stack.push(nidx);
                    }
                }
            }
        }
        largest = largest.max(size);
        total += size;
    }

    // exterior of the complement
    let mut outside = vec![false; nx * ny];
    let mut stack: Vec<usize> = Vec::new();
    for i in 0..ny {
        for j in 0..nx {
            if (i == 0 || j == 0 || i == ny - 1 || j == nx - 1)
                && !escaping[i * nx + j]
                && !outside[i * nx + j]
            {
                outside[i * nx + j] = true;
                stack.push(i * nx + j);
            }
        }
    }
    while let Some(idx) = stack.pop() {
        let (i, j) = (idx / nx, idx % nx);
        for (ni, nj) in [
            (i.wrapping_sub(1), j),
            (i + 1, j),
            (i, j.wrapping_sub(1)),
            (i, j + 1),
        ] {
            if ni < ny && nj < nx {
                let nidx = ni * nx + nj;
                if !escaping[nidx] && !outside[nidx] {
                    outside[nidx] = true;
                    stack.push(nidx);
                }
            }
        }
    }
    let mut hole_seen = vec![false; nx * ny];
    let mut holes = 0usize;
    for start in 0..nx * ny {
        if escaping[start] || outside[start] || hole_seen[start] {
            continue;
        }
        holes += 1;
        let mut stack = vec![start];
        hole_seen[start] = true;
        while let Some(idx) = stack.pop() {
            let (i, j) = (idx / nx, idx % nx);
            for (ni, nj) in [
                (i.wrapping_sub(1), j),
                (i + 1, j),
                (i, j.wrapping_sub(1)),
                (i, j + 1),
            ] {
                if ni < ny && nj < nx {
                    let nidx = ni * nx + nj;
                    if !escaping[nidx] && !outside[nidx] && !hole_seen[nidx] {
                        hole_seen[nidx] = true;
                        stack.push(nidx);
                    }
                }
            }
        }
    }
    let fraction = if total == 0 {
        0.0
    } else {
        largest as f64 / total as f64
    };
    (components, holes, fraction)
}

#[test]
fn connectivity_matches_brute_force_on_random_masks() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spec = GridSpec {
        center_re: 0.0,
        center_im: 0.0,
        width: 1.0,
        height: 1.0,
        nx: 64,
        ny: 64,
        max_iter: 10,
        bailout: 1e3,
        confirm_steps: 1,
    };
    for trial in 0..100 {
        let density = rng.random_range(0.2..0.8);
        let escaping: Vec<bool> = (0..64 * 64).map(|_| rng.random_bool(density)).collect();
        let classes: Vec<PixelClass> = escaping
            .iter()
            .map(|&e| {
                if e {
                    PixelClass::Escaping { step: 1 }
                } else {
                    PixelClass::Bounded
                }
            })
            .collect();
        let g = grid::EscapeGrid::from_classes(spec, classes);
        let rep = grid::connectivity(&g);
        let (components, holes, fraction) = brute_force_connectivity(64, 64, &escaping);
        assert_eq!(rep.escaping_components, components, "trial {trial}");
        assert_eq!(rep.hole_components, holes, "trial {trial}");
        assert!(
            (rep.largest_component_fraction - fraction).abs() < 1e-12,
            "trial {trial}"
        );
    }
}

#[test]
fn connectivity_matches_brute_force_at_128() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let spec = GridSpec {
        center_re: 0.0,
        center_im: 0.0,
        width: 1.0,
        height: 1.0,
        nx: 128,
        ny: 128,
        max_iter: 10,
        bailout: 1e3,
        confirm_steps: 1,
    };
    for _ in 0..5 {
        let escaping: Vec<bool> = (0..128 * 128).map(|_| rng.random_bool(0.5)).collect();
        let classes: Vec<PixelClass> = escaping
            .iter()
            .map(|&e| {
                if e {
                    PixelClass::Escaping { step: 1 }
                } else {
                    PixelClass::Undetermined
                }
            })
            .collect();
        let g = grid::EscapeGrid::from_classes(spec, classes);
        let rep = grid::connectivity(&g);
        let (components, holes, fraction) = brute_force_connectivity(128, 128, &escaping);
        assert_eq!(rep.escaping_components, components);
        assert_eq!(rep.hole_components, holes);
        assert!((rep.largest_component_fraction - fraction).abs() < 1e-12);
    }
}

#[test]
fn julia_boundary_contained_in_class_changes_512() {
    let f = FunctionSpec::ScaledExp { lambda: 0.2 };
    let spec = GridSpec {
        center_re: 1.0,
        center_im: 0.0,
        width: 6.0,
        height: 6.0,
        nx: 512,
        ny: 512,
        max_iter: 60,
        bailout: 1e6,
        confirm_steps: 3,
    };
    let g = grid::classify_grid(&f, &spec).unwrap();
    let boundary = grid::julia_boundary(&g);
    assert!(
        boundary.iter().any(|&b| b),
        "boundary mask must be nonempty"
    );

    // recount oracle: every marked pixel has a 4-neighbor whose
    // escaping-status differs
    let nx = 512usize;
    let escaping: Vec<bool> = g
        .classes
        .iter()
        .map(|c| matches!(c, PixelClass::Escaping { .. }))
        .collect();
    for (idx, &marked) in boundary.iter().enumerate() {
        if !marked {
            continue;
        }
        let (i, j) = (idx / nx, idx % nx);
        let mut differs = false;
        if i > 0 {
            differs |= escaping[idx - nx] != escaping[idx];
        }
        if i + 1 < 512 {
            differs |= escaping[idx + nx] != escaping[idx];
        }
        if j > 0 {
            differs |= escaping[idx - 1] != escaping[idx];
        }
        if j + 1 < nx {
            differs |= escaping[idx + 1] != escaping[idx];
        }
        assert!(differs, "marked pixel without class change at ({i}, {j})");
    }
}

#[test]
fn mask_chain_holds_on_exp_grid() {
    let f = FunctionSpec::ScaledExp { lambda: 1.0 };
    let spec = GridSpec {
        center_re: 1.0,
        center_im: 0.0,
        width: 4.0,
        height: 3.0,
        nx: 48,
        ny: 36,
        max_iter: 40,
        bailout: 1e6,
        confirm_steps: 3,
    };
    let mut g = grid::classify_grid(&f, &spec).unwrap();
    grid::classify_fast(&f, &mut g, 0.0, 4).unwrap();
    grid::classify_bd(&f, &mut g, Complex64::new(0.3, 0.0), 0.2, false).unwrap();
    assert_eq!(grid::mask_inclusion_violations(&g), 0);
    assert!(g.fast_mask.iter().any(|&b| b), "some pixel should be fast");
}
