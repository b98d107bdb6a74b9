import json
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from saddlebench import (ConfigError, UndefinedMetricError, build_problem,
                         mean_convergence_rate, run_experiment, sweep)
from saddlebench.cli import main
from saddlebench.harness import ExperimentConfig, default_tau0
from saddlebench.trace import CSV_HEADER


def quad_config(out_dir="results", **overrides):
    base = {
        "problem": {"kind": "quadratic", "m": 30, "n": 10, "kappa_x": 100.0,
                    "kappa_y": 10.0, "kappa_c": None, "bilinear": False,
                    "seed": 5},
        "solvers": [{"id": "sesop", "d": 3, "max_iters": 300},
                    {"id": "gda", "max_iters": 4000}],
        "repetitions": 1,
        "out_dir": out_dir,
    }
    base.update(overrides)
    return ExperimentConfig.from_dict(base)


class TestMeanConvergenceRate:
    def test_halving_distances(self):
        dists = [2.0 ** -k for k in range(6)]
        assert mean_convergence_rate(dists, K=5) == pytest.approx(0.5)

    def test_constant_distances(self):
        assert mean_convergence_rate([3.0] * 7, K=6) == pytest.approx(1.0)

    def test_hand_arithmetic(self):
        assert mean_convergence_rate([1.0, 0.1, 0.05], K=2) == pytest.approx(0.3)

    def test_too_short_raises(self):
        with pytest.raises(UndefinedMetricError):
            mean_convergence_rate([1.0], K=1)

    def test_truncates_at_zero_distance(self):
        rate = mean_convergence_rate([1.0, 0.5, 0.0, 123.0], K=3)
        assert rate == pytest.approx(0.5)

    def test_invalid_k(self):
        with pytest.raises(ValueError):
            mean_convergence_rate([1.0, 0.5], K=0)

    @given(ratio=st.floats(0.05, 0.95), n=st.integers(2, 30))
    @settings(max_examples=50, deadline=None)
    def test_geometric_sequences(self, ratio, n):
        dists = [ratio ** k for k in range(n)]
        assert mean_convergence_rate(dists, K=n - 1) == pytest.approx(ratio)


class TestConfig:
    def test_roundtrip_through_json(self, tmp_path):
        cfg = quad_config(repetitions=3, target_grad_norm=1e-7)
        path = tmp_path / "cfg.json"
        with open(path, "w") as fh:
            json.dump(cfg.to_dict(), fh)
        back = ExperimentConfig.from_json(path)
        assert back.to_dict() == cfg.to_dict()

    def test_rejects_unknown_keys(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({"problem": {"kind": "dirac", "n": 4},
                                        "bogus": 1})

    def test_rejects_unknown_kind_and_solver(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(problem={"kind": "rosenbrock"})
        with pytest.raises(ConfigError):
            ExperimentConfig(problem={"kind": "dirac", "n": 4},
                             solvers=[{"id": "adam"}])

    def test_build_problem_validates_params(self):
        with pytest.raises(ConfigError):
            build_problem({"kind": "quadratic", "m": 10})  # missing n
        with pytest.raises(ConfigError):
            build_problem({"kind": "dirac", "n": 8, "weird": 1})

    def test_default_tau0_by_kind(self):
        assert default_tau0({"kind": "quadratic", "bilinear": False}) == 0.0
        assert default_tau0({"kind": "quadratic", "bilinear": True}) == 1.0
        assert default_tau0({"kind": "dirac"}) == 1.0
        assert default_tau0({"kind": "lasso"}) == 1.0

    def test_dirac_solution_is_target_vector(self):
        problem, z_star = build_problem({"kind": "dirac", "n": 6, "seed": 3})
        np.testing.assert_array_equal(z_star.x, problem.c_data)
        np.testing.assert_array_equal(z_star.y, np.zeros(6))


class TestRunExperiment:
    def test_writes_traces_and_summary(self, tmp_path):
        summaries = run_experiment(quad_config(), out_dir=tmp_path)
        assert {s.label for s in summaries} == {"sesop", "gda"}
        assert all(s.converged for s in summaries)
        sesop, gda = (next(s for s in summaries if s.label == name)
                      for name in ("sesop", "gda"))
        assert sesop.iterations * 5 <= gda.iterations
        for name in ("sesop_rep0.csv", "gda_rep0.csv", "summary.json"):
            assert (tmp_path / name).exists()
        lines = (tmp_path / "sesop_rep0.csv").read_text().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == sesop.iterations + 2

    def test_byte_identical_reruns(self, tmp_path):
        cfg = quad_config(repetitions=2)
        run_experiment(cfg, out_dir=tmp_path / "a")
        run_experiment(cfg, out_dir=tmp_path / "b")
        for name in ("sesop_rep0.csv", "sesop_rep1.csv", "gda_rep0.csv"):
            assert (tmp_path / "a" / name).read_bytes() == \
                   (tmp_path / "b" / name).read_bytes()

    def test_empty_solver_list_writes_nothing(self, tmp_path):
        out = tmp_path / "empty"
        summaries = run_experiment(quad_config(solvers=[]), out_dir=out)
        assert summaries == []
        assert not out.exists()

    def test_oracle_counts_match_hvp_contract(self, tmp_path):
        # with d = 1 the subspace holds one pair, so each inner iteration
        # costs exactly two Hessian-vector products (and none elsewhere at c=0)
        cfg = quad_config(solvers=[{"id": "sesop", "d": 1, "max_iters": 400}])
        summary, = run_experiment(cfg, out_dir=tmp_path)
        lines = (tmp_path / "sesop_rep0.csv").read_text().splitlines()[1:]
        inner_total = sum(int(row.split(",")[6]) for row in lines)
        assert summary.oracle_calls["hvp"] == 2 * inner_total

    def test_duplicate_labels_are_disambiguated(self, tmp_path):
        cfg = quad_config(solvers=[{"id": "sesop", "d": 1, "max_iters": 5},
                                   {"id": "sesop", "d": 2, "max_iters": 5}])
        summaries = run_experiment(cfg, out_dir=tmp_path)
        assert {s.label for s in summaries} == {"sesop", "sesop1"}

    def test_threads_env_gives_same_results(self, tmp_path):
        cfg = quad_config(repetitions=2)
        run_experiment(cfg, out_dir=tmp_path / "serial")
        old = os.environ.get("SADDLE_BENCH_THREADS")
        os.environ["SADDLE_BENCH_THREADS"] = "4"
        try:
            run_experiment(cfg, out_dir=tmp_path / "parallel")
        finally:
            if old is None:
                del os.environ["SADDLE_BENCH_THREADS"]
            else:
                os.environ["SADDLE_BENCH_THREADS"] = old
        for name in ("sesop_rep0.csv", "gda_rep1.csv"):
            assert (tmp_path / "serial" / name).read_bytes() == \
                   (tmp_path / "parallel" / name).read_bytes()

    def test_matrix_dump_flag(self, tmp_path):
        cfg = quad_config(dump_matrices=True)
        run_experiment(cfg, out_dir=tmp_path)
        from saddlebench import load_matrix
        a_x = load_matrix(tmp_path / "A_x.mat")
        assert a_x.shape == (30, 30)

    def test_dirac_tau_split_with_near_solution_starts(self, tmp_path):
        # damping decides whether the equilibrium or the saturation region
        # wins: tau = 0 ends with a tiny gradient far from the solution
        cfg = ExperimentConfig(
            problem={"kind": "dirac", "n": 50, "seed": 2},
            solvers=[{"id": "sesop", "label": f"tau{t}", "tau0": t,
                      "max_iters": 4000} for t in (0.0, 0.1, 1.0)],
            init_radius=1.0)
        summaries = run_experiment(cfg, out_dir=tmp_path)
        by_label = {s.label: s for s in summaries}
        assert by_label["tau0.0"].final_dist_opt > 1e-2
        assert by_label["tau0.1"].final_dist_opt <= 1e-5
        assert by_label["tau1.0"].final_dist_opt <= 1e-5

    def test_init_radius_requires_known_solution(self, tmp_path):
        cfg = ExperimentConfig(problem={"kind": "lasso", "m_rows": 10,
                                        "n_feat": 8, "seed": 0},
                               solvers=[{"id": "admm", "max_iters": 5}],
                               init_radius=1.0)
        with pytest.raises(ConfigError):
            run_experiment(cfg, out_dir=tmp_path)

    def test_admm_requires_lasso(self, tmp_path):
        cfg = quad_config(solvers=[{"id": "admm"}])
        with pytest.raises(ConfigError):
            run_experiment(cfg, out_dir=tmp_path)
        boosted = quad_config(solvers=[{"id": "sesop", "boost": True}])
        with pytest.raises(ConfigError):
            run_experiment(boosted, out_dir=tmp_path)

    def test_lasso_traces_have_empty_dist_column(self, tmp_path):
        cfg = ExperimentConfig(
            problem={"kind": "lasso", "m_rows": 30, "n_feat": 20, "seed": 4},
            solvers=[{"id": "admm", "max_iters": 20},
                     {"id": "sesop", "boost": True, "tau0": 0.3,
                      "max_iters": 50}])
        run_experiment(cfg, out_dir=tmp_path)
        for name in ("admm_rep0.csv", "sesop_rep0.csv"):
            rows = (tmp_path / name).read_text().splitlines()[1:]
            assert all(row.split(",")[2] == "" for row in rows), name


class TestSweep:
    def test_kappa_sweep_rate_trend(self, tmp_path):
        cfg = quad_config(solvers=[{"id": "sesop", "d": 3, "max_iters": 400}])
        path = sweep(cfg, "kappa", [10.0, 100.0, 1000.0], out_dir=tmp_path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("param,value,plot_x")
        rows = [line.split(",") for line in lines[1:]]
        assert [float(r[1]) for r in rows] == [10.0, 100.0, 1000.0]
        assert [float(r[2]) for r in rows] == [0.1, 0.01, 0.001]
        rates = [float(r[4]) for r in rows]
        assert rates[0] <= rates[1] <= rates[2]

    def test_subspace_dim_sweep_iteration_trend(self, tmp_path):
        cfg = quad_config(solvers=[{"id": "sesop", "max_iters": 400}])
        path = sweep(cfg, "subspace_dim", [1, 2, 3, 5], out_dir=tmp_path)
        rows = [line.split(",") for line in path.read_text().splitlines()[1:]]
        iters = {float(r[1]): float(r[5]) for r in rows}
        assert iters[1.0] >= iters[2.0] >= iters[3.0]
        assert iters[1.0] > iters[3.0]

    def test_single_value_sweep_matches_run_experiment(self, tmp_path):
        cfg = quad_config()
        sweep(cfg, "kappa", [50.0], out_dir=tmp_path / "sw")
        inner = tmp_path / "sw" / "kappa_50"
        swept = cfg.replace(problem=dict(cfg.problem, kappa_x=50.0,
                                         kappa_y=50.0))
        run_experiment(swept, out_dir=tmp_path / "direct")
        assert (inner / "sesop_rep0.csv").read_bytes() == \
               (tmp_path / "direct" / "sesop_rep0.csv").read_bytes()

    def test_inapplicable_param_raises(self, tmp_path):
        cfg = ExperimentConfig(problem={"kind": "dirac", "n": 5, "seed": 0},
                               solvers=[{"id": "gda", "max_iters": 5}])
        with pytest.raises(ConfigError):
            sweep(cfg, "kappa", [10.0], out_dir=tmp_path)
        with pytest.raises(ConfigError):
            sweep(cfg, "tau", [0.1], out_dir=tmp_path)
        with pytest.raises(ConfigError):
            sweep(cfg, "stepsize", [0.1], out_dir=tmp_path)


class TestCli:
    def write_config(self, tmp_path, cfg=None):
        cfg = cfg if cfg is not None else quad_config()
        path = tmp_path / "cfg.json"
        with open(path, "w") as fh:
            json.dump(cfg.to_dict(), fh)
        return path

    def test_run_exit_zero(self, tmp_path, capsys):
        path = self.write_config(tmp_path)
        assert main(["run", "--config", str(path),
                     "--out", str(tmp_path / "out")]) == 0
        assert "sesop" in capsys.readouterr().out

    def test_empty_solvers_warns_and_exits_zero(self, tmp_path, capsys):
        path = self.write_config(tmp_path, quad_config(solvers=[]))
        assert main(["run", "--config", str(path),
                     "--out", str(tmp_path / "out")]) == 0
        assert "warning" in capsys.readouterr().err

    def test_config_error_exit_one(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"problem": {"kind": "nope"}}))
        assert main(["run", "--config", str(bad)]) == 1
        missing = tmp_path / "missing.json"
        assert main(["run", "--config", str(missing)]) == 2  # unreadable file
        notjson = tmp_path / "notjson.json"
        notjson.write_text("{{{{")
        assert main(["run", "--config", str(notjson)]) == 1

    def test_io_error_exit_two(self, tmp_path):
        path = self.write_config(tmp_path)
        target = tmp_path / "blocked"
        target.write_text("a plain file, not a directory")
        assert main(["run", "--config", str(path), "--out", str(target)]) == 2

    def test_seed_override_changes_problem(self, tmp_path):
        path = self.write_config(tmp_path)
        main(["run", "--config", str(path), "--out", str(tmp_path / "s5")])
        main(["run", "--config", str(path), "--seed", "6",
              "--out", str(tmp_path / "s6")])
        a = (tmp_path / "s5" / "sesop_rep0.csv").read_bytes()
        b = (tmp_path / "s6" / "sesop_rep0.csv").read_bytes()
        assert a != b

    def test_sweep_command(self, tmp_path):
        path = self.write_config(tmp_path, quad_config(
            solvers=[{"id": "sesop", "max_iters": 200}]))
        assert main(["sweep", "--config", str(path), "--param", "subspace_dim",
                     "--values", "1,3", "--out", str(tmp_path / "sw")]) == 0
        assert (tmp_path / "sw" / "sweep_subspace_dim.csv").exists()
        assert main(["sweep", "--config", str(path), "--param", "subspace_dim",
                     "--values", "2.5", "--out", str(tmp_path / "sw2")]) == 1

    def test_compare_command_filters_solvers(self, tmp_path, capsys):
        path = self.write_config(tmp_path)
        assert main(["compare", "--config", str(path), "--solvers", "gda",
                     "--out", str(tmp_path / "cmp")]) == 0
        out = capsys.readouterr().out
        assert "gda" in out and "sesop" not in out
        assert main(["compare", "--config", str(path), "--solvers", "das",
                     "--out", str(tmp_path / "cmp2")]) == 1
