use mcs_core::fespace::l2_project;
use mcs_core::forms::{
    assemble_a, assemble_b1, assemble_b2_ibp, assemble_b2_volume, build_system, QuadDegrees, Spaces,
};
use mcs_core::linsolve::solve_saddle;
use mcs_core::manufactured::{exact_fields, gradient_forcing_case};
use mcs_core::mesh::build_structured_mesh;
use mcs_core::poly::{PolyField, Polynomial};

fn b2_gap(dim: usize, k: usize, n: usize) -> f64 {
    let mesh = build_structured_mesh(dim, n).unwrap();
    let spaces = Spaces::new(&mesh, k).unwrap();
    let q = QuadDegrees::for_order(k);
    let vol = assemble_b2_volume(&mesh, &spaces, q).unwrap();
    let ibp = assemble_b2_ibp(&mesh, &spaces, q).unwrap();
    vol.max_abs_diff(&ibp) / vol.max_abs()
}

#[test]
fn b2_representations_agree_2d() {
    for k in 1..=3 {
        let gap = b2_gap(2, k, 2);
        assert!(gap <= 1e-11, "k = {k}: {gap:e}");
    }
}

#[test]
fn b2_representations_agree_3d() {
    let gap = b2_gap(3, 1, 1);
    assert!(gap <= 1e-11, "{gap:e}");
}

#[test]
fn stress_mass_is_symmetric_positive() {
    let mesh = build_structured_mesh(2, 2).unwrap();
    let spaces = Spaces::new(&mesh, 2).unwrap();
    let a = assemble_a(&mesh, &spaces, 0.5, QuadDegrees::for_order(2)).unwrap();
    assert!(a.asymmetry() <= 1e-14 * a.max_abs());
    let eig = a.to_dense().symmetric_eigen().eigenvalues;
    assert!(eig.min() > 0.0);
}

#[test]
fn b1_annihilates_constant_pressure() {
    // (div u, 1) = 0 for velocities with vanishing normal trace
    let mesh = build_structured_mesh(2, 2).unwrap();
    let spaces = Spaces::new(&mesh, 1).unwrap();
    let b1 = assemble_b1(&mesh, &spaces, QuadDegrees::for_order(1)).unwrap();
    let one = PolyField::scalar(Polynomial::constant(2, 1.0));
    let c = l2_project(&mesh, &spaces.pressure, &one).unwrap();
    let row = b1.transpose().matvec(&c);
    for (i, v) in row.iter().enumerate() {
        if !spaces.velocity.constrained[i] {
            assert!(v.abs() < 1e-13, "dof {i}: {v:e}");
        }
    }
}

#[test]
fn gradient_force_gives_zero_velocity() {
    let exact = gradient_forcing_case(2, 1e-3).unwrap();
    let mesh = build_structured_mesh(2, 2).unwrap();
    let sys = build_system(&mesh, 2, 1e-3, &exact.f).unwrap();
    let sol = solve_saddle(&sys).unwrap();
    let umax = sol.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(umax <= 1e-9, "{umax:e}");
    assert!(sol.residual <= 1e-10);
}

#[test]
fn manufactured_solve_is_deterministic() {
    let exact = exact_fields(2, 1.0).unwrap();
    let mesh = build_structured_mesh(2, 2).unwrap();
    let sys = build_system(&mesh, 1, 1.0, &exact.f).unwrap();
    let a = solve_saddle(&sys).unwrap();
    let b = solve_saddle(&build_system(&mesh, 1, 1.0, &exact.f).unwrap()).unwrap();
    assert_eq!(a, b);
}
