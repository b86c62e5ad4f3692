"""Meshes, assembly, quadrature, linear solves, initial guesses, field dumps."""

import numpy as np
import pytest
from scipy.integrate import quad

import nehari_opt as no
from nehari_opt.discretization import initial_guess_function, radial_guess_function
from nehari_opt.fileio import read_field, write_field

PI_SQ = np.pi ** 2
# int_{-1}^{1} x^2 sin^4(pi x) dx = 1/4 - 15/(32 pi^2)
X2_SIN4 = 0.25 - 15.0 / (32.0 * PI_SQ)


def ones_quad(mesh):
    return mesh.eval_at_quad(lambda pts: np.full(pts.shape[:-1], 1.0))


class TestIntervalAssembly:
    def test_pure_stiffness_entries(self):
        # a = 0, 4 elements: tridiagonal with 2/h on the diagonal, -1/h off it
        mesh = no.IntervalMesh(4)
        op = mesh.build_operator(None)
        mat = op.sparse.toarray()
        h = 0.5
        assert np.allclose(np.diag(mat), 2.0 / h)
        assert np.allclose(np.diag(mat, 1), -1.0 / h)
        assert np.allclose(np.diag(mat, -1), -1.0 / h)

    def test_norm_of_sin_interpolant_converges_to_pi_squared(self):
        errs = []
        for n in (250, 500, 1000):
            mesh = no.IntervalMesh(n)
            op = mesh.build_operator(None)
            u = mesh.interpolate(lambda x: np.sin(np.pi * x[..., 0]))
            errs.append(abs(op.norm_sq(u) - PI_SQ))
        assert errs[-1] <= 1e-4 * PI_SQ
        assert errs[1] < 0.3 * errs[0] and errs[2] < 0.3 * errs[1]

    def test_operator_is_exactly_symmetric(self):
        mesh = no.IntervalMesh(64)
        a_quad = mesh.eval_at_quad(lambda pts: pts[..., 0] ** 2 + 0.5)
        mat = mesh.build_operator(a_quad).sparse
        assert (abs(mat - mat.T)).max() == 0.0

    def test_nodes_are_bitwise_symmetric(self):
        mesh = no.IntervalMesh(314)
        assert np.array_equal(mesh.nodes, -mesh.nodes[::-1])
        assert mesh.nodes[0] == -1.0 and mesh.nodes[-1] == 1.0

    def test_indefinite_coefficient_fails_assembly(self):
        mesh = no.IntervalMesh(32)
        a_quad = mesh.eval_at_quad(lambda pts: np.full(pts.shape[:-1], -30.0))
        with pytest.raises(no.AssemblyFailure):
            mesh.build_operator(a_quad)


class TestSquareAssembly:
    def test_operator_is_exactly_symmetric(self):
        mesh = no.SquareMesh(8)
        a_quad = mesh.eval_at_quad(lambda pts: (pts ** 2).sum(axis=-1))
        mat = mesh.build_operator(a_quad).sparse
        assert (abs(mat - mat.T)).max() == 0.0

    def test_norm_of_product_sine_interpolant(self):
        # u = sin(pi x) sin(pi y) has int |grad u|^2 = 2 pi^2 on (-1,1)^2
        errs = []
        for n in (16, 32):
            mesh = no.SquareMesh(n)
            op = mesh.build_operator(None)
            u = mesh.interpolate(
                lambda p: np.sin(np.pi * p[..., 0]) * np.sin(np.pi * p[..., 1])
            )
            errs.append(abs(op.norm_sq(u) - 2.0 * PI_SQ))
        assert errs[1] < 0.3 * errs[0]

    def test_indefinite_coefficient_detected_during_solve(self):
        mesh = no.SquareMesh(10)
        a_quad = mesh.eval_at_quad(lambda pts: np.full(pts.shape[:-1], -40.0))
        op = mesh.build_operator(a_quad)
        rhs = np.ones(mesh.n_dof)
        with pytest.raises((no.AssemblyFailure, no.LinearSolveFailure)):
            op.solve(rhs, 1e-10)


class TestNonlinearIntegrals:
    def test_square_of_plateau_matches_mass_matrix(self):
        mesh = no.IntervalMesh(40)
        u = np.ones(mesh.n_dof)
        mass = mesh._weighted_mass(ones_quad(mesh))
        assert mesh.integral_power(u, ones_quad(mesh), 2.0) == pytest.approx(
            float(u @ (mass @ u)), rel=1e-12
        )

    def test_weighted_quartic_converges_to_oracle(self):
        oracle = quad(lambda x: x * x * np.sin(np.pi * x) ** 4, -1.0, 1.0, epsabs=1e-14)[0]
        assert oracle == pytest.approx(X2_SIN4, abs=1e-13)
        errs = []
        for n in (100, 200, 400):
            mesh = no.IntervalMesh(n)
            g = mesh.eval_at_quad(lambda pts: pts[..., 0] ** 2)
            u = mesh.interpolate(lambda x: np.sin(np.pi * x[..., 0]))
            errs.append(abs(mesh.integral_power(u, g, 4.0) - oracle))
        assert errs[-1] <= 2e-5
        assert errs[1] < 0.3 * errs[0] and errs[2] < 0.3 * errs[1]

    @pytest.mark.parametrize("q", [2.0, 3.5, 4.0])
    def test_homogeneous_scaling(self, q):
        mesh = no.IntervalMesh(50)
        rng = np.random.default_rng(1)
        u = rng.standard_normal(mesh.n_dof)
        g = ones_quad(mesh)
        assert mesh.integral_power(3.0 * u, g, q) == pytest.approx(
            3.0 ** q * mesh.integral_power(u, g, q), rel=1e-12
        )

    def test_quadrature_order_is_sufficient_for_cubic_nonlinearity(self):
        # the default rule integrates |u|^4 of the piecewise-linear interpolant
        # exactly; doubling the rule must not change the value
        coarse = no.IntervalMesh(50, n_quad=4)
        fine = no.IntervalMesh(50, n_quad=8)
        u = coarse.interpolate(lambda x: np.cos(x[..., 0]))
        v_c = coarse.integral_power(u, ones_quad(coarse), 4.0)
        v_f = fine.integral_power(u, ones_quad(fine), 4.0)
        assert v_c == pytest.approx(v_f, rel=1e-14)

    def test_load_vector_pairs_like_the_integral(self):
        mesh = no.SquareMesh(8)
        rng = np.random.default_rng(2)
        u = rng.standard_normal(mesh.n_dof)
        g = ones_quad(mesh)
        # int g |u|^(p-1) u * u == int g |u|^(p+1)
        assert float(mesh.nl_load(u, g, 3.0) @ u) == pytest.approx(
            mesh.integral_power(u, g, 4.0), rel=1e-12
        )


class TestLinearSolve:
    def test_zero_rhs_gives_zero(self):
        mesh = no.IntervalMesh(50)
        op = mesh.build_operator(None)
        assert not np.any(op.solve(np.zeros(mesh.n_dof)))

    def test_manufactured_solution_on_interval(self):
        errs = []
        for n in (100, 200):
            mesh = no.IntervalMesh(n)
            op = mesh.build_operator(None)
            f = mesh.interpolate(lambda x: PI_SQ * np.sin(np.pi * x[..., 0]))
            rhs = mesh.nl_load(f, ones_quad(mesh), 1.0)  # p=1 load is int f phi_i
            psi = op.solve(rhs)
            exact = mesh.interpolate(lambda x: np.sin(np.pi * x[..., 0]))
            errs.append(np.max(np.abs(psi - exact)))
        assert errs[0] <= 10.0 * (2.0 / 100) ** 2
        assert errs[1] < 0.3 * errs[0]

    @pytest.mark.parametrize("mesh_name", ["interval200", "square24", "disk32"])
    def test_relative_residual_contract(self, mesh_name, request):
        mesh = request.getfixturevalue(mesh_name)
        a_quad = mesh.eval_at_quad(lambda pts: (pts ** 2).sum(axis=-1) + 1.0)
        op = mesh.build_operator(a_quad)
        rng = np.random.default_rng(3)
        rhs = rng.standard_normal(mesh.n_dof)
        psi = op.solve(rhs, 1e-10)
        assert np.linalg.norm(op.matvec(psi) - rhs) <= 1e-10 * np.linalg.norm(rhs)


class TestInitialGuesses:
    def test_interval_profile_at_origin(self):
        mesh = no.IntervalMesh(10)  # even element count puts a node at x = 0
        v = mesh.initial_direction()
        assert v[mesh.n_dof // 2] == 1.0  # (0-1)^2 (0+1) = 1

    def test_square_profile_at_origin(self):
        mesh = no.SquareMesh(4)
        v = mesh.initial_direction().reshape(3, 3)
        assert v[1, 1] == 1.0

    def test_disk_profile_function_at_origin(self):
        fn = initial_guess_function("disk")
        assert fn(np.zeros((1, 2)))[0] == 1.0

    def test_disk_sampling_matches_the_function(self, disk32):
        fn = initial_guess_function("disk")
        assert np.array_equal(disk32.initial_direction(), fn(disk32.coordinates()))

    def test_radial_profiles_are_radial(self, disk32):
        # evaluated through Cartesian coordinates, so rings agree to one ulp
        v = disk32.rings(disk32.radial_direction())
        assert np.max(np.abs(v - v[:, :1])) <= 1e-15

    def test_interval_default_is_not_even(self):
        mesh = no.IntervalMesh(100)
        v = mesh.initial_direction()
        assert np.max(np.abs(v - v[::-1])) > 0.1

    def test_unknown_domain_rejected(self):
        with pytest.raises(ValueError):
            initial_guess_function("annulus")
        with pytest.raises(ValueError):
            radial_guess_function("annulus")


class TestDiskGrid:
    def test_requires_even_angular_count(self):
        with pytest.raises(ValueError):
            no.DiskMesh(63, 32)

    def test_operator_is_symmetric_in_the_euclidean_pairing(self, henon_disk):
        rng = np.random.default_rng(4)
        op = henon_disk.operator
        x, y = rng.standard_normal(op.n_dof), rng.standard_normal(op.n_dof)
        gap = abs(y @ op.matvec(x) - x @ op.matvec(y))
        scale = np.linalg.norm(op.matvec(x)) * np.linalg.norm(y)
        assert gap <= 1e-12 * scale

    def test_solve_is_direct_to_machine_precision(self, henon_disk):
        rng = np.random.default_rng(5)
        op = henon_disk.operator
        rhs = rng.standard_normal(op.n_dof)
        psi = op.solve(rhs)
        assert np.linalg.norm(op.matvec(psi) - rhs) <= 1e-12 * np.linalg.norm(rhs)

    def test_radial_data_stays_radial_through_assembly_and_solve(self, henon_disk):
        mesh = henon_disk.mesh
        u = mesh.interpolate(lambda pts: 1.0 - (pts ** 2).sum(axis=-1))
        pair = no.h_gradients(henon_disk, no.DiscreteField(u, mesh))
        for fld in (pair.grad_e, pair.grad_g):
            grid = mesh.rings(fld.coeffs)
            spread = np.max(grid.max(axis=1) - grid.min(axis=1))
            assert spread <= 1e-12 * np.max(np.abs(grid))

    def test_norm_of_smooth_radial_profile_converges(self):
        # u = 1 - r^2 has int |grad u|^2 = 2 pi int r (2r)^2 dr = 2 pi
        vals = []
        for n in (16, 32, 64):
            mesh = no.DiskMesh(16, n)
            op = mesh.build_operator(None)
            u = mesh.interpolate(lambda pts: 1.0 - (pts ** 2).sum(axis=-1))
            vals.append(op.norm_sq(u))
        errs = [abs(v - 2.0 * np.pi) for v in vals]
        assert errs[2] < errs[1] < errs[0]
        assert errs[2] <= 1e-2

    def test_nonradial_coefficient_rejected(self, disk32):
        a_quad = disk32.eval_at_quad(lambda pts: pts[..., 0])
        with pytest.raises(no.AssemblyFailure):
            disk32.build_operator(a_quad)


class TestGroundStateRefinement:
    def test_energy_stable_under_mesh_doubling(self):
        energies = {}
        for n in (1000, 2000):
            mesh = no.IntervalMesh(n)
            problem = no.preset_henon(1.0, 3.0, mesh)
            rec = no.nehari_descent(
                problem, no.DiscreteField(mesh.initial_direction(), mesh), no.SolverConfig()
            )
            assert rec.converged
            energies[n] = rec.final_energy
        rel = abs(energies[2000] - energies[1000]) / abs(energies[1000])
        assert rel <= 1e-5


class TestFieldDump:
    @pytest.mark.parametrize("mesh_name", ["interval200", "square24", "disk32"])
    def test_round_trip_is_bit_exact(self, mesh_name, request, tmp_path):
        mesh = request.getfixturevalue(mesh_name)
        rng = np.random.default_rng(6)
        field = no.DiscreteField(rng.standard_normal(mesh.n_dof), mesh)
        path = tmp_path / "field.txt"
        write_field(field, path)
        back = read_field(path, mesh)
        assert np.array_equal(back.coeffs, field.coeffs)

    def test_header_carries_domain_and_resolution(self, tmp_path):
        mesh = no.IntervalMesh(12)
        write_field(no.DiscreteField(np.zeros(mesh.n_dof), mesh), tmp_path / "f.txt")
        first = (tmp_path / "f.txt").read_text().splitlines()[0]
        assert first == "interval 12"

    def test_reader_reconstructs_mesh_from_header(self, tmp_path):
        mesh = no.DiskMesh(8, 4)
        rng = np.random.default_rng(7)
        field = no.DiscreteField(rng.standard_normal(mesh.n_dof), mesh)
        write_field(field, tmp_path / "f.txt")
        back = read_field(tmp_path / "f.txt")
        assert back.mesh.mesh_id == mesh.mesh_id
        assert np.array_equal(back.coeffs, field.coeffs)

    def test_mismatched_mesh_rejected(self, tmp_path):
        mesh = no.IntervalMesh(12)
        write_field(no.DiscreteField(np.zeros(mesh.n_dof), mesh), tmp_path / "f.txt")
        with pytest.raises(ValueError):
            read_field(tmp_path / "f.txt", no.IntervalMesh(16))


class TestQuadratureOrderRule:
    def test_covers_the_nonlinearity_degree(self):
        from nehari_opt.problem import quad_order_for_exponent

        # at least ceil((p+1)/2)+1 points, never below the package default
        assert quad_order_for_exponent(3.0) == 4
        assert quad_order_for_exponent(5.0) == 4
        assert quad_order_for_exponent(5.5) == 5
        assert quad_order_for_exponent(9.0) == 6
        for p in (1.5, 2.0, 3.7, 6.2, 11.0):
            assert quad_order_for_exponent(p) >= int(np.ceil((p + 1.0) / 2.0)) + 1
