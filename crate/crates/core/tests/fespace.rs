use mcs_core::fespace::dofs::{DofSet, Tabulation};
use mcs_core::fespace::local::{
    bdm_dofs, bdm_local_basis, l2_gram, rt_dofs, rt_local_basis, stress_dofs, vorticity_basis,
};
use mcs_core::fespace::maps::{mutual_span_residual, piola, skew_map, stress_map};
use mcs_core::fespace::table::{normal_component, nt_component};
use mcs_core::fespace::*;
use mcs_core::manufactured::{exact_fields, quintic_pressure};
use mcs_core::mesh::{build_structured_mesh, Mesh};
use mcs_core::poly::{div, grad, PolyField, Polynomial};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn duality_error(dofs: &DofSet, shapes: &[PolyField]) -> f64 {
    let v = dofs.vandermonde(shapes);
    let mut worst: f64 = 0.0;
    for i in 0..v.nrows() {
        for j in 0..v.ncols() {
            let expect = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v[(i, j)] - expect).abs());
        }
    }
    worst
}

fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn max_abs(v: &[Vec<f64>]) -> f64 {
    v.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
}

/// Values of a global function on both sides of every interior facet.
fn facet_traces(mesh: &Mesh, space: &FeSpace, coeffs: &[f64], f: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let facet = &mesh.facets[f];
    let mut sides = Vec::new();
    for (side, &e) in facet.elements.iter().enumerate() {
        let geom = ElementGeometry::new(mesh, e).unwrap();
        let field = space.local_field(&geom, coeffs).unwrap();
        let qp = geom.facet_points(facet.local_index[side], 2 * space.order + 2).unwrap();
        // order points by physical position so both sides agree
        let mut pts: Vec<_> = qp.x.iter().zip(&qp.xi).collect();
        pts.sort_by(|a, b| a.0.partial_cmp(b.0).unwrap());
        sides.push(pts.iter().map(|(_, xi)| field.eval(&xi[..mesh.dim])).collect::<Vec<_>>());
    }
    let b = sides.pop().unwrap();
    let a = sides.pop().unwrap();
    (a, b)
}

#[test]
fn rt_duality_and_dimensions() {
    for (dim, ks, n) in [(2, vec![1, 2, 3], 2), (3, vec![1, 2], 1)] {
        let mesh = build_structured_mesh(dim, n).unwrap();
        for k in ks {
            let space = build_velocity_space(&mesh, k).unwrap();
            for e in [0, mesh.num_elements() - 1] {
                let geom = ElementGeometry::new(&mesh, e).unwrap();
                let shapes = rt_local_basis(&geom, k).unwrap();
                assert_eq!(shapes.len(), space.local_dim());
                let err = duality_error(&rt_dofs(&geom, k, 2 * k + 2).unwrap(), &shapes);
                assert!(err < 1e-11, "RT d={dim} k={k}: {err}");
            }
        }
    }
}

#[test]
fn stress_duality_trace_free_and_counts() {
    for (dim, ks, n) in [(2, vec![1, 2, 3], 2), (3, vec![1, 2], 1)] {
        let mesh = build_structured_mesh(dim, n).unwrap();
        for k in ks {
            for e in 0..mesh.num_elements() {
                let geom = ElementGeometry::new(&mesh, e).unwrap();
                let shapes = stress_local_basis(&geom, k).unwrap();
                let expect =
                    (dim * dim - 1) * if dim == 2 { (k + 1) * (k + 2) / 2 } else { (k + 1) * (k + 2) * (k + 3) / 6 };
                assert_eq!(shapes.len(), expect);
                let err = duality_error(&stress_dofs(&geom, k, 2 * k + 2).unwrap(), &shapes);
                assert!(err < 1e-11, "stress d={dim} k={k} e={e}: {err}");
                for s in shapes.iter().chain(&enrichment_basis(&geom, k).unwrap()) {
                    let tr = s.trace().unwrap().max_abs_coeff();
                    assert!(tr < 1e-13 * s.max_abs_coeff(), "trace d={dim} k={k}: {tr} vs {}", s.max_abs_coeff());
                }
            }
        }
    }
}

#[test]
fn enrichment_has_vanishing_nt_trace() {
    for (dim, k, count) in [(2, 1, 2), (2, 2, 3), (2, 3, 4), (3, 1, 9), (3, 2, 18)] {
        let mesh = build_structured_mesh(dim, 1).unwrap();
        let geom = ElementGeometry::new(&mesh, 1).unwrap();
        let enr = enrichment_basis(&geom, k).unwrap();
        assert_eq!(enr.len(), count);
        for i in 0..=dim {
            let qp = geom.facet_points(i, 2 * k + 4).unwrap();
            let tab = Tabulation::new(&enr, &qp.xi);
            let n = geom.facets[i].outward;
            for q in 0..qp.len() {
                for s in 0..enr.len() {
                    let nt = nt_component(tab.at(q, s), &n, dim);
                    assert!(nt.iter().all(|v| v.abs() < 1e-12), "d={dim} k={k}: {nt:?}");
                }
            }
        }
    }
}

#[test]
fn direct_sum_gram_is_full_rank() {
    for (dim, k) in [(2, 1), (2, 3), (3, 1)] {
        let mesh = build_structured_mesh(dim, 1).unwrap();
        let geom = ElementGeometry::new(&mesh, 0).unwrap();
        let mut all = stress_local_basis(&geom, k).unwrap();
        all.extend(enrichment_basis(&geom, k).unwrap());
        let eig = nalgebra::SymmetricEigen::new(l2_gram(&geom, &all).unwrap()).eigenvalues;
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = eig.iter().cloned().fold(0.0, f64::max);
        assert!(min > 1e-10 * max, "d={dim} k={k}: {min} / {max}");
    }
}

#[test]
fn bubble_properties() {
    // 2D: vanishes on the boundary
    let mesh = build_structured_mesh(2, 1).unwrap();
    let geom = ElementGeometry::new(&mesh, 0).unwrap();
    let b = matrix_bubble(&geom);
    for i in 0..3 {
        for xi in geom.facet_points(i, 4).unwrap().xi {
            assert!(b.eval(&xi[..2]).iter().all(|v| v.abs() < 1e-15));
        }
    }
    // 3D reference element: centroid value and tangential trace of qB
    let verts = vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let refmesh = Mesh::from_elements(3, verts, vec![vec![0, 1, 2, 3]]).unwrap();
    let g = ElementGeometry::new(&refmesh, 0).unwrap();
    let b = matrix_bubble(&g);
    let centroid = g.to_local(&[0.25, 0.25, 0.25]);
    let val = b.eval(&centroid);
    let mut expect = [0.0; 9];
    for gl in &g.grad_lambda {
        for a in 0..3 {
            for c in 0..3 {
                expect[a * 3 + c] += gl[a] * gl[c] / 64.0;
            }
        }
    }
    for (v, e) in val.iter().zip(&expect) {
        assert!((v - e).abs() < 1e-15);
    }
    let q = PolyField::constant_matrix(3, &[[1.0, 2.0, -1.0], [0.5, -3.0, 2.0], [1.5, 0.25, 4.0]], 3);
    let qb = q.matmul(&b).unwrap();
    for i in 0..4 {
        let n = g.facets[i].outward;
        for xi in g.facet_points(i, 5).unwrap().xi {
            let v = qb.eval(&xi);
            // tangential trace: (qB) t for every tangent t
            for t in &g.facets[i].tangents {
                for r in 0..3 {
                    let s: f64 = (0..3).map(|c| v[r * 3 + c] * t[c]).sum();
                    assert!(s.abs() < 1e-12, "facet {i}: {s} (n = {n:?})");
                }
            }
        }
    }
}

#[test]
fn global_stress_nt_continuity_and_rt_normal_continuity() {
    for (dim, k, n) in [(2, 1, 2), (2, 3, 2), (3, 1, 1)] {
        let mesh = build_structured_mesh(dim, n).unwrap();
        let stress = build_stress_space(&mesh, k).unwrap();
        let c = random_vector(stress.ndof, 7);
        let vel = build_velocity_space(&mesh, k).unwrap();
        let mut cv = random_vector(vel.ndof, 11);
        for (i, &con) in vel.constrained.iter().enumerate() {
            if con {
                cv[i] = 0.0;
            }
        }
        for (f, facet) in mesh.facets.iter().enumerate() {
            let nrm = facet.normal;
            if facet.boundary {
                let e = facet.elements[0];
                let geom = ElementGeometry::new(&mesh, e).unwrap();
                let u = vel.local_field(&geom, &cv).unwrap();
                let vals: Vec<Vec<f64>> = geom
                    .facet_points(facet.local_index[0], 2 * k)
                    .unwrap()
                    .xi
                    .iter()
                    .map(|xi| u.eval(&xi[..dim]))
                    .collect();
                let scale = max_abs(&vals);
                for v in &vals {
                    assert!(normal_component(v, &nrm[..dim]).abs() < 1e-12 * scale);
                }
                continue;
            }
            let (a, b) = facet_traces(&mesh, &stress, &c, f);
            let scale = max_abs(&a).max(max_abs(&b));
            for (ta, tb) in a.iter().zip(&b) {
                let (na, nb) = (nt_component(ta, &nrm, dim), nt_component(tb, &nrm, dim));
                for i in 0..dim {
                    assert!((na[i] - nb[i]).abs() < 1e-11 * scale, "nt jump d={dim} k={k}");
                }
            }
            let (a, b) = facet_traces(&mesh, &vel, &cv, f);
            let scale = max_abs(&a).max(max_abs(&b));
            for (ta, tb) in a.iter().zip(&b) {
                let jump = normal_component(ta, &nrm[..dim]) - normal_component(tb, &nrm[..dim]);
                assert!(jump.abs() < 1e-12 * scale, "normal jump d={dim} k={k}: {jump} (scale {scale})");
            }
        }
    }
}

#[test]
fn rt_interpolation_reproduces_constants_and_preserves_zero_divergence() {
    let mesh = build_structured_mesh(2, 1).unwrap();
    let space = build_velocity_space(&mesh, 1).unwrap();
    let one = PolyField::vector(vec![Polynomial::constant(2, 1.0), Polynomial::zero(2)]);
    let c = interpolate_rt(&mesh, &space, &one).unwrap();
    for e in 0..2 {
        let geom = ElementGeometry::new(&mesh, e).unwrap();
        let u = space.local_field(&geom, &c).unwrap();
        for xi in geom.volume_points(3).unwrap().xi {
            let v = u.eval(&xi[..2]);
            assert!((v[0] - 1.0).abs() < 1e-13 && v[1].abs() < 1e-13);
        }
    }
    let exact = exact_fields(2, 1e-3).unwrap();
    let mesh = build_structured_mesh(2, 4).unwrap();
    for k in 1..=3 {
        let space = build_velocity_space(&mesh, k).unwrap();
        let c = interpolate_rt(&mesh, &space, &exact.u).unwrap();
        for e in 0..mesh.num_elements() {
            let geom = ElementGeometry::new(&mesh, e).unwrap();
            let d = div(&space.local_field(&geom, &c).unwrap()).unwrap();
            for xi in geom.volume_points(2 * k).unwrap().xi {
                assert!(d.eval(&xi[..2])[0].abs() < 1e-12);
            }
        }
    }
}

#[test]
fn bdm_local_basis_is_dual_and_reproduces_gradients() {
    let mesh = build_structured_mesh(2, 2).unwrap();
    for order in [2, 3, 4] {
        let geom = ElementGeometry::new(&mesh, 3).unwrap();
        let shapes = bdm_local_basis(&geom, order).unwrap();
        assert!(duality_error(&bdm_dofs(&geom, order, 2 * order).unwrap(), &shapes) < 1e-11);
    }
    // q = x^2 (3 - 2x) + y^2 (3 - 2y) has zero normal derivative on the square boundary
    let x = Polynomial::coordinate(2, 0);
    let y = Polynomial::coordinate(2, 1);
    let cubic = |t: &Polynomial| t.pow(2).mul(&Polynomial::affine(2, 3.0, &[0.0, 0.0]).axpy(-2.0, t));
    let q = cubic(&x).axpy(1.0, &cubic(&y));
    let gq = grad(&PolyField::scalar(q)).unwrap();
    let space = build_bdm_space(&mesh, 2).unwrap();
    let c = interpolate_bdm(&mesh, &space, &gq).unwrap();
    for (i, &con) in space.constrained.iter().enumerate() {
        if con {
            assert!(c[i].abs() < 1e-14);
        }
    }
    for e in 0..mesh.num_elements() {
        let geom = ElementGeometry::new(&mesh, e).unwrap();
        let u = space.local_field(&geom, &c).unwrap();
        for (x, xi) in geom.volume_points(6).unwrap().x.iter().zip(geom.volume_points(6).unwrap().xi) {
            let (a, b) = (u.eval(&xi[..2]), gq.eval(&x[..2]));
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
    }
}

#[test]
fn l2_projection_mean_and_exactness() {
    let mesh = build_structured_mesh(2, 1).unwrap();
    let space = build_pressure_space(&mesh, 1).unwrap();
    let c = l2_project(&mesh, &space, &PolyField::scalar(quintic_pressure(2))).unwrap();
    let mut mean = 0.0;
    for e in 0..2 {
        let geom = ElementGeometry::new(&mesh, e).unwrap();
        let p = space.local_field(&geom, &c).unwrap();
        let qp = geom.volume_points(2).unwrap();
        mean += qp.xi.iter().zip(&qp.w).map(|(xi, w)| w * p.eval(&xi[..2])[0]).sum::<f64>();
    }
    assert!(mean.abs() < 1e-13);

    let mesh = build_structured_mesh(3, 1).unwrap();
    let space = build_vorticity_space(&mesh, 2).unwrap();
    let geom = ElementGeometry::new(&mesh, 2).unwrap();
    let basis = vorticity_basis(3, 2);
    assert_eq!(basis.len(), 30);
    // a skew field in the space: kappa of a quadratic vector field
    let x = Polynomial::coordinate(3, 0);
    let z = Polynomial::coordinate(3, 2);
    let w = PolyField::vector(vec![x.mul(&z), z.scale(2.0), Polynomial::constant(3, 0.5)]);
    let eta = mcs_core::poly::kappa(&w).unwrap();
    let c = l2_project(&mesh, &space, &eta).unwrap();
    let field = space.local_field(&geom, &c).unwrap();
    for (x, xi) in geom.volume_points(4).unwrap().x.iter().zip(geom.volume_points(4).unwrap().xi) {
        let (a, b) = (field.eval(&xi), eta.eval(x));
        for i in 0..9 {
            assert!((a[i] - b[i]).abs() < 1e-12);
        }
    }
}

#[test]
fn vandermonde_conditioning_is_mesh_independent() {
    let cond = |n: usize| {
        let mesh = build_structured_mesh(2, n).unwrap();
        let geom = ElementGeometry::new(&mesh, 1).unwrap();
        let fields = mcs_core::fespace::local::stress_spanning(&geom, 2);
        let v = stress_dofs(&geom, 2, 4).unwrap().vandermonde(&fields);
        let s = v.singular_values();
        s.max() / s.min()
    };
    let (c1, c8) = (cond(1), cond(8));
    assert!((c1 - c8).abs() < 1e-8 * c1, "{c1} vs {c8}");
}

#[test]
fn mapped_reference_bases_span_the_physical_spaces() {
    let refverts = vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let refmesh = Mesh::from_elements(3, refverts, vec![vec![0, 1, 2, 3]]).unwrap();
    let rg = ElementGeometry::new(&refmesh, 0).unwrap();
    let mesh = build_structured_mesh(3, 2).unwrap();
    let k = 1;
    for e in [0, 7, 20] {
        let g = ElementGeometry::new(&mesh, e).unwrap();
        let mapped: Vec<_> = stress_local_basis(&rg, k).unwrap().iter().map(|s| stress_map(&g, &rg, s)).collect();
        let direct = stress_local_basis(&g, k).unwrap();
        let r = mutual_span_residual(&g, &direct, &mapped).unwrap();
        assert!(r < 1e-9, "stress span mismatch on element {e}: {r}");
        let mut mapped_full = mapped.clone();
        mapped_full.extend(enrichment_basis(&rg, k).unwrap().iter().map(|s| stress_map(&g, &rg, s)));
        let mut direct_full = direct.clone();
        direct_full.extend(enrichment_basis(&g, k).unwrap());
        let r = mutual_span_residual(&g, &direct_full, &mapped_full).unwrap();
        assert!(r < 1e-9, "enriched span mismatch on element {e}: {r}");
        let mapped: Vec<_> = rt_local_basis(&rg, k).unwrap().iter().map(|s| piola(&g, &rg, s)).collect();
        let r = mutual_span_residual(&g, &rt_local_basis(&g, k).unwrap(), &mapped).unwrap();
        assert!(r < 1e-9, "RT span mismatch: {r}");
        let mapped: Vec<_> = vorticity_basis(3, k).iter().map(|s| skew_map(&g, &rg, s)).collect();
        let r = mutual_span_residual(&g, &vorticity_basis(3, k), &mapped).unwrap();
        assert!(r < 1e-9, "vorticity span mismatch: {r}");
    }
}

#[test]
fn stress_interpolation_converges_at_order_k_plus_one() {
    let exact = exact_fields(2, 1e-3).unwrap();
    for k in [1, 2] {
        let mut errs = Vec::new();
        for n in [2, 4, 8] {
            let mesh = build_structured_mesh(2, n).unwrap();
            let space = build_stress_space(&mesh, k).unwrap();
            let c = interpolate_stress(&mesh, &space, &exact.sigma).unwrap();
            let mut e2 = 0.0;
            for e in 0..mesh.num_elements() {
                let geom = ElementGeometry::new(&mesh, e).unwrap();
                let s = space.local_field(&geom, &c).unwrap();
                let qp = geom.volume_points(12).unwrap();
                for q in 0..qp.len() {
                    let (a, b) = (s.eval(&qp.xi[q][..2]), exact.sigma.eval(&qp.x[q][..2]));
                    e2 += qp.w[q] * a.iter().zip(&b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>();
                }
            }
            errs.push(e2.sqrt());
        }
        let eoc = (errs[1] / errs[2]).log2();
        assert!((eoc - (k + 1) as f64).abs() < 0.25, "k={k}: {errs:?} eoc {eoc}");
    }
}
