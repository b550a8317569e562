use mcs_core::fespace::dofs::{lincomb, vector_monomials};
use mcs_core::fespace::local::rt_dofs;
use mcs_core::fespace::{build_bdm_space, interpolate_bdm, ElementGeometry, FeSpace};
use mcs_core::harness::study::SolveArtifacts;
use mcs_core::harness::{solve_level, StudyConfig, StudyKind};
use mcs_core::manufactured::exact_fields;
use mcs_core::mesh::{build_structured_mesh, Mesh};
use mcs_core::poly::{curl, CurlKind, PolyField, Polynomial};
use mcs_core::postproc::{local_minimize, local_objective, reconstruct};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NU: f64 = 1e-3;

fn solved(dim: usize, k: usize, n: usize) -> SolveArtifacts {
    let config = StudyConfig::new(dim, k, vec![n], StudyKind::Convergence);
    solve_level(&config, n, &exact_fields(dim, NU).unwrap()).unwrap()
}

/// Normal traces of a global field on both sides of every interior facet, and on boundary facets.
fn normal_jumps(mesh: &Mesh, space: &FeSpace, coeffs: &[f64]) -> (f64, f64) {
    let (mut interior, mut boundary) = (0.0f64, 0.0f64);
    for facet in &mesh.facets {
        let mut sides = Vec::new();
        for (side, &e) in facet.elements.iter().enumerate() {
            let geom = ElementGeometry::new(mesh, e).unwrap();
            let field = space.local_field(&geom, coeffs).unwrap();
            let qp = geom.facet_points(facet.local_index[side], 2 * space.order + 2).unwrap();
            let mut pts: Vec<_> = qp.x.iter().zip(&qp.xi).collect();
            pts.sort_by(|a, b| a.0.partial_cmp(b.0).unwrap());
            let vals: Vec<f64> = pts
                .iter()
                .map(|(_, xi)| field.eval(&xi[..mesh.dim]).iter().zip(&facet.normal).map(|(a, b)| a * b).sum())
                .collect();
            sides.push(vals);
        }
        match sides.as_slice() {
            [a, b] => a.iter().zip(b).for_each(|(x, y)| interior = interior.max((x - y).abs())),
            [a] => a.iter().for_each(|x| boundary = boundary.max(x.abs())),
            _ => unreachable!(),
        }
    }
    (interior, boundary)
}

#[test]
fn relaxed_velocity_keeps_raviart_thomas_moments() {
    for (d, k, n) in [(2, 1, 2), (2, 2, 2), (2, 3, 1), (3, 1, 1)] {
        let art = solved(d, k, n);
        let sp = &art.system.spaces;
        let mut worst = 0.0f64;
        for e in 0..art.mesh.num_elements() {
            let geom = ElementGeometry::new(&art.mesh, e).unwrap();
            let uh = sp.velocity.local_field(&geom, &art.solution.u).unwrap();
            let dofs = rt_dofs(&geom, k, 2 * k + 2).unwrap();
            let a = dofs.vandermonde(std::slice::from_ref(&uh));
            let b = dofs.vandermonde(std::slice::from_ref(&art.post.relaxed[e]));
            worst = worst.max((a - b).abs().max() / art.errors.norm_uh.max(1.0));
        }
        assert!(worst < 1e-10, "d = {d}, k = {k}: {worst:e}");
        assert_eq!(art.post.fallbacks, 0);
    }
}

#[test]
fn reconstruction_keeps_raviart_thomas_moments() {
    let (d, k) = (2, 2);
    let art = solved(d, k, 2);
    let sp = &art.system.spaces;
    for e in 0..art.mesh.num_elements() {
        let geom = ElementGeometry::new(&art.mesh, e).unwrap();
        let uh = sp.velocity.local_field(&geom, &art.solution.u).unwrap();
        let us = art.post.space.local_field(&geom, &art.post.coeffs).unwrap();
        let dofs = rt_dofs(&geom, k, 2 * k + 2).unwrap();
        let diff = dofs.vandermonde(&[uh]) - dofs.vandermonde(&[us]);
        assert!(diff.abs().max() < 1e-12, "element {e}: {:e}", diff.abs().max());
    }
}

#[test]
fn local_minimizer_beats_admissible_perturbations() {
    let art = solved(2, 1, 2);
    let sp = &art.system.spaces;
    let k = 1;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for e in [0, 3, 5] {
        let geom = ElementGeometry::new(&art.mesh, e).unwrap();
        let sigma = sp.stress.local_field(&geom, &art.solution.sigma).unwrap();
        let uh = sp.velocity.local_field(&geom, &art.solution.u).unwrap();
        let best = local_minimize(&geom, &sigma, &uh, NU, k).unwrap().field;
        let j0 = local_objective(&geom, &best, &sigma, NU, k).unwrap();
        // directions with vanishing Raviart-Thomas moments, by projection onto the kernel
        let basis = vector_monomials(2, k + 1);
        let c = rt_dofs(&geom, k, 2 * k + 1).unwrap().vandermonde(&basis);
        let pinv = c.clone().pseudo_inverse(1e-13).unwrap();
        for _ in 0..8 {
            let r = DVector::from_fn(basis.len(), |_, _| rng.random_range(-1.0..1.0));
            let z = &r - &pinv * (&c * &r);
            assert!((&c * &z).amax() < 1e-10);
            let scale = 1e-3 * best.max_abs_coeff().max(1e-6);
            let v = best.axpy(scale, &lincomb(&basis, z.as_slice()));
            let j = local_objective(&geom, &v, &sigma, NU, k).unwrap();
            assert!(j >= j0 * (1.0 - 1e-12), "element {e}: {j:e} < {j0:e}");
        }
    }
}

#[test]
fn postprocessed_velocity_is_divergence_free_and_normal_continuous() {
    for (d, k, n) in [(2, 1, 4), (2, 3, 2), (3, 1, 2)] {
        let art = solved(d, k, n);
        assert!(art.errors.div_ustar_max < 1e-10, "d = {d}, k = {k}: {:e}", art.errors.div_ustar_max);
        let (jump, bnd) = normal_jumps(&art.mesh, &art.post.space, &art.post.coeffs);
        assert!(jump < 1e-11 && bnd < 1e-11, "d = {d}, k = {k}: {jump:e} {bnd:e}");
    }
}

#[test]
fn reconstruction_reproduces_global_bdm_fields() {
    // curl of x(1-x)y(1-y): divergence free with vanishing normal trace on the unit square
    let psi = Polynomial::from_terms(2, &[([1, 1, 0], 1.0), ([2, 1, 0], -1.0), ([1, 2, 0], -1.0), ([2, 2, 0], 1.0)]);
    let u = curl(&PolyField::scalar(psi), CurlKind::ScalarToVector2d).unwrap();
    let k = 2;
    let mesh = build_structured_mesh(2, 2).unwrap();
    let space = build_bdm_space(&mesh, k + 1).unwrap();
    let coeffs = interpolate_bdm(&mesh, &space, &u).unwrap();
    let local: Vec<PolyField> = (0..mesh.num_elements())
        .map(|e| space.local_field(&ElementGeometry::new(&mesh, e).unwrap(), &coeffs).unwrap())
        .collect();
    let (_, again) = reconstruct(&mesh, k, &local).unwrap();
    let diff = coeffs.iter().zip(&again).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(diff < 1e-12, "{diff:e}");
}
