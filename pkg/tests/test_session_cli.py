"""Session persistence and the command-line front end."""

import json
import os

import numpy as np
import pytest

from cmesibo import cli
from cmesibo.domain import Box
from cmesibo.loop import BoConfig, Optimizer, ProblemDescriptor
from cmesibo.problems import gardner1, get_problem
from cmesibo.session import (
    SessionError,
    load_session,
    problem_ref,
    resolve_problem,
    save_session,
)

FAST = dict(
    method="random", K=2, n_init=3, rff_D=100, acq_grid=21, rec_grid=31,
    acq_local_iters=5,
)


def fast_cfg(**kw):
    return BoConfig(**{**FAST, **kw})


class TestProblemRef:
    def test_builtin_by_name(self):
        ref = problem_ref(gardner1())
        assert ref == {"name": "gardner1", "custom": False}
        assert resolve_problem(ref).name == "gardner1"

    def test_custom_by_geometry(self):
        desc = ProblemDescriptor("mine", Box([0.0, 1.0], [2.0, 3.0]), [0.5])
        ref = problem_ref(desc)
        assert ref["custom"]
        back = resolve_problem(ref)
        assert isinstance(back, ProblemDescriptor)
        assert back.name == "mine"
        assert np.array_equal(back.domain.lower, [0.0, 1.0])
        assert back.thresholds == [0.5]


class TestSessionRoundTrip:
    def _stepped_optimizer(self):
        p = gardner1()
        opt = Optimizer(p, fast_cfg(seed=11))
        opt.tell(p.evaluate(opt.ask()))
        opt.tell(p.evaluate(opt.ask()))
        return p, opt

    def test_state_survives_round_trip(self, tmp_path):
        p, opt = self._stepped_optimizer()
        path = tmp_path / "s.json"
        save_session(opt, problem_ref(p), path)
        opt2, ref = load_session(path)
        assert ref["name"] == "gardner1"
        assert np.array_equal(opt2.X, opt.X)
        assert np.array_equal(opt2.Y, opt.Y)
        assert opt2.iteration == opt.iteration
        assert opt2.pending is None
        assert len(opt2.trace.records) == len(opt.trace.records)
        for k2, k1 in zip(opt2.kernels, opt.kernels):
            assert k2.sigma2_lin == k1.sigma2_lin
            assert k2.sigma2_rbf == k1.sigma2_rbf
            assert np.array_equal(k2.lengthscales, k1.lengthscales)

    def test_resumed_session_continues_identically(self, tmp_path):
        p, opt = self._stepped_optimizer()
        path = tmp_path / "s.json"
        save_session(opt, problem_ref(p), path)
        opt2, _ = load_session(path)
        assert np.array_equal(opt.ask(), opt2.ask())

    def test_pending_batch_round_trips(self, tmp_path):
        p, opt = self._stepped_optimizer()
        pending = opt.ask()
        path = tmp_path / "s.json"
        save_session(opt, problem_ref(p), path)
        opt2, _ = load_session(path)
        assert np.array_equal(opt2.pending, pending)
        rec1 = opt.tell(p.evaluate(pending))
        rec2 = opt2.tell(p.evaluate(pending))
        assert np.array_equal(rec1.point, rec2.point)

    def test_serialization_is_canonical(self, tmp_path):
        p, opt = self._stepped_optimizer()
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        save_session(opt, problem_ref(p), a)
        opt2, ref = load_session(a)
        save_session(opt2, ref, b)
        assert a.read_bytes() == b.read_bytes()

    def test_unknown_version_rejected(self, tmp_path):
        p, opt = self._stepped_optimizer()
        path = tmp_path / "s.json"
        save_session(opt, problem_ref(p), path)
        doc = json.loads(path.read_text())
        doc["version"] = 999
        path.write_text(json.dumps(doc))
        with pytest.raises(SessionError):
            load_session(path)


CLI_FLAGS = ["--method", "random", "--k", "2", "--n-init", "3"]


class TestCli:
    def test_list_problems(self, capsys):
        assert cli.main(["list-problems"]) == 0
        out = capsys.readouterr().out
        for name in ("gardner1", "gardner2", "gramacy", "hartmann6"):
            assert name in out

    def test_run_writes_trace_and_session(self, tmp_path, capsys):
        csv = tmp_path / "t.csv"
        sess = tmp_path / "s.json"
        code = cli.main(
            ["run", "--problem", "gramacy", "--iters", "2", "--seed", "1",
             "--out", str(csv), "--session", str(sess)] + CLI_FLAGS
        )
        assert code == 0
        lines = csv.read_text().splitlines()
        assert lines[0] == (
            "iteration,q,x1,x2,rec_x1,rec_x2,"
            "utility_gap,best_observed_gap,feasible_flag"
        )
        assert len(lines) == 1 + 3 + 2  # header + n_init rows + T rows
        assert json.loads(sess.read_text())["version"] == 1

    def test_default_output_directory_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("CMESIBO_OUT_DIR", str(tmp_path))
        code = cli.main(
            ["run", "--problem", "gramacy", "--iters", "1", "--seed", "2"]
            + CLI_FLAGS
        )
        assert code == 0
        assert (tmp_path / "gramacy_random_seed2.csv").exists()
        assert (tmp_path / "gramacy_random_seed2.session.json").exists()

    def test_ask_requires_problem_for_new_session(self, tmp_path):
        assert cli.main(["ask", "--session", str(tmp_path / "s.json")]) == 2

    def test_tell_without_session(self, tmp_path):
        code = cli.main(["tell", "--session", str(tmp_path / "missing.json"), "--", "1.0"])
        assert code == 2

    def _ask(self, sess, capsys, extra=()):
        code = cli.main(
            ["ask", "--session", str(sess), *extra] + CLI_FLAGS + ["--seed", "4"]
        )
        assert code == 0
        rows = [
            [float(v) for v in line.split()]
            for line in capsys.readouterr().out.strip().splitlines()
        ]
        return np.array(rows)

    def test_ask_tell_recommend_cycle(self, tmp_path, capsys):
        sess = tmp_path / "s.json"
        p = get_problem("gardner1")
        X = self._ask(sess, capsys, extra=["--problem", "gardner1"])
        assert X.shape == (3, 2)

        # wrong arity is a usage error and leaves the batch pending
        assert cli.main(["tell", "--session", str(sess), "--", "1.0", "2.0"]) == 2

        Y = p.evaluate(X)
        vals = [repr(float(v)) for v in Y.ravel()]
        assert cli.main(["tell", "--session", str(sess), "--"] + vals) == 0
        out = capsys.readouterr().out
        assert "recommendation:" in out
        assert "feasible_by_rule:" in out

        # telling again without a fresh ask is a state error
        assert cli.main(["tell", "--session", str(sess), "--"] + vals) == 1

        assert cli.main(["recommend", "--session", str(sess)]) == 0
        assert "predicted_mean:" in capsys.readouterr().out

    def test_ask_tell_matches_run_trace(self, tmp_path, capsys):
        """File-driven stepping and the in-process runner share one trace."""
        T = 2
        run_csv = tmp_path / "run.csv"
        code = cli.main(
            ["run", "--problem", "gardner1", "--iters", str(T), "--seed", "4",
             "--out", str(run_csv), "--session", str(tmp_path / "r.json")]
            + CLI_FLAGS
        )
        assert code == 0
        capsys.readouterr()  # drop the runner's own status lines

        sess = tmp_path / "steps.json"
        p = get_problem("gardner1")
        for _ in range(T + 1):
            X = self._ask(sess, capsys, extra=["--problem", "gardner1"])
            vals = [repr(float(v)) for v in p.evaluate(X).ravel()]
            assert cli.main(["tell", "--session", str(sess), "--"] + vals) == 0
            capsys.readouterr()
        opt, _ = load_session(sess)
        step_csv = tmp_path / "steps.csv"
        opt.trace.write_csv(step_csv)
        assert run_csv.read_bytes() == step_csv.read_bytes()
