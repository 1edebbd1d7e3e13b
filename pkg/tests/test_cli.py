import io
import json
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pandas as pd

from kaclab.execution.cli import ORACLES, main
from kaclab.execution.manifest import MANIFEST_NAME, RunManifest
from kaclab.execution.runner import run_replicates
from kaclab.execution.streams import replicate_stream, tag_key
from kaclab.errors import DomainError
from kaclab.randmat.oracles import InequalityReport


def run_cli(argv: list[str]) -> tuple[int, str, str]:
    stdout, stderr = io.StringIO(), io.StringIO()
    with redirect_stdout(stdout), redirect_stderr(stderr):
        code = main(argv)
    return code, stdout.getvalue(), stderr.getvalue()


def draw(index: int, rng: np.random.Generator, scale: float = 1.0) -> tuple[int, float]:
    return index, scale * float(rng.uniform())


class StreamTests(unittest.TestCase):
    def test_streams_depend_on_seed_tag_and_index(self) -> None:
        first = replicate_stream(1, "walk", 0).uniform(size=4)
        np.testing.assert_array_equal(first, replicate_stream(1, "walk", 0).uniform(size=4))
        self.assertFalse(np.array_equal(first, replicate_stream(2, "walk", 0).uniform(size=4)))
        self.assertFalse(np.array_equal(first, replicate_stream(1, "couple", 0).uniform(size=4)))
        self.assertFalse(np.array_equal(first, replicate_stream(1, "walk", 1).uniform(size=4)))

    def test_tag_key_is_stable(self) -> None:
        self.assertEqual(tag_key("walk"), tag_key("walk"))
        self.assertLess(tag_key("verify:telescoping"), 2**32)


class RunnerTests(unittest.TestCase):
    def test_results_in_index_order(self) -> None:
        results = run_replicates(draw, 6, 3, "test", threads=2, scale=2.0)
        self.assertEqual([index for index, _ in results], list(range(6)))
        self.assertEqual(results, run_replicates(draw, 6, 3, "test", threads=1, scale=2.0))

    def test_replicate_does_not_depend_on_count(self) -> None:
        self.assertEqual(run_replicates(draw, 3, 9, "test"), run_replicates(draw, 8, 9, "test")[:3])

    def test_validation(self) -> None:
        self.assertEqual(run_replicates(draw, 0, 1, "test"), [])
        with self.assertRaises(DomainError):
            run_replicates(draw, -1, 1, "test")
        with self.assertRaises(DomainError):
            run_replicates(draw, 2, 1, "test", threads=0)


class CommandLineTests(unittest.TestCase):
    def setUp(self) -> None:
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)

    def tearDown(self) -> None:
        self.tmp.cleanup()

    def test_walk_writes_summary_and_manifest(self) -> None:
        out = self.root / "walk"
        code, stdout, _ = run_cli(["walk", "--n", "5", "--steps", "1000", "--seed", "7", "--out", str(out)])
        self.assertEqual(code, 0)
        self.assertIn("Walk complete", stdout)
        summary = pd.read_csv(out / "walk_summary.csv")
        self.assertEqual(list(summary.columns), ["replicate", "t", "x11", "xnn", "orthogonality_error"])
        self.assertEqual(summary["replicate"].nunique(), 200)
        self.assertLess(summary["orthogonality_error"].max(), 1e-10)
        proxy = pd.read_csv(out / "tv_proxy.csv")
        self.assertEqual(proxy["t"].tolist(), list(range(0, 1001, 100)))
        self.assertAlmostEqual(proxy["ks"].iloc[0], 1.0)
        self.assertTrue(proxy["rank_deficient"].iloc[0])
        self.assertFalse(proxy["rank_deficient"].iloc[-1])

        manifest = RunManifest.load(out / "manifest.json")
        self.assertEqual(manifest.command, "walk")
        self.assertEqual(manifest.seed, 7)
        self.assertEqual(manifest.parameters["T"], 1000)
        self.assertEqual(sorted(manifest.digests), ["tv_proxy.csv", "walk_summary.csv"])
        self.assertEqual(manifest.verify_digests(out), [])

        (out / "tv_proxy.csv").write_text("t,ks\n")
        self.assertEqual(manifest.verify_digests(out), ["tv_proxy.csv"])

    def test_walk_is_reproducible_across_runs_and_workers(self) -> None:
        outputs = []
        for label, threads in (("a", "1"), ("b", "1"), ("c", "2")):
            out = self.root / label
            argv = ["walk", "--n", "4", "--steps", "60", "--replicates", "100", "--seed", "11"]
            code, _, _ = run_cli(argv + ["--threads", threads, "--out", str(out)])
            self.assertEqual(code, 0)
            outputs.append(((out / "walk_summary.csv").read_bytes(), (out / "tv_proxy.csv").read_bytes()))
        self.assertEqual(outputs[0], outputs[1])
        self.assertEqual(outputs[0], outputs[2])

    def test_walk_usage_errors(self) -> None:
        for argv in (
            ["walk", "--n", "1"],
            ["walk", "--steps", "-1"],
            ["walk", "--replicates", "20"],
            ["walk", "--threads", "0"],
        ):
            code, _, stderr = run_cli(argv + ["--out", str(self.root / "bad")])
            self.assertEqual(code, 2, argv)
            self.assertIn("error", stderr)

    def test_identical_couple_always_coalesces(self) -> None:
        out = self.root / "identical"
        argv = ["couple", "--n", "3", "--flavor", "lazy", "--Q", "1", "--eps", "0.05", "--replicates", "10"]
        code, stdout, _ = run_cli(argv + ["--identical", "--seed", "1", "--out", str(out)])
        self.assertEqual(code, 0)
        self.assertIn("Coalescence rate: 1.0000", stdout)
        rates = pd.read_csv(out / "coalescence_rate.csv")
        self.assertEqual(float(rates["rate"].iloc[0]), 1.0)
        self.assertEqual(int(rates["exhausted"].iloc[0]), 0)
        outcomes = pd.read_csv(out / "coalescence.csv")
        self.assertTrue(outcomes["coalesced"].all())
        traces = pd.read_csv(out / "traces.csv")
        self.assertEqual(list(traces.columns), ["replicate", "t", "dist_main", "dist_scaffold"])
        self.assertTrue(np.all(traces["dist_main"] == 0.0))

    def test_nearby_couple(self) -> None:
        out = self.root / "nearby"
        argv = ["couple", "--n", "3", "--flavor", "greedy", "--replicates", "8", "--seed", "5", "--out", str(out)]
        code, _, _ = run_cli(argv)
        self.assertEqual(code, 0)
        outcomes = pd.read_csv(out / "coalescence.csv")
        self.assertEqual(len(outcomes), 8)
        self.assertTrue(set(outcomes["status"]).issubset({"coalesced", "separate"}))
        self.assertTrue(np.all(outcomes["scaffold_final"] >= 0))
        self.assertEqual(RunManifest.load(out / "manifest.json").verify_digests(out), [])

    def test_couple_usage_errors(self) -> None:
        for argv in (["--eps", "4"], ["--eps", "0"], ["--Q", "0"], ["--replicates", "0"], ["--init-distance", "-1"]):
            code, _, _ = run_cli(["couple"] + argv + ["--out", str(self.root / "bad")])
            self.assertEqual(code, 2, argv)

    def test_phi_report(self) -> None:
        reports = []
        for seed in ("2", "3"):
            out = self.root / f"phi{seed}"
            argv = ["phi", "--n", "3", "--flavor", "dinf", "--samples", "1000", "--seed", seed]
            code, stdout, _ = run_cli(argv + ["--dump-samples", "--out", str(out)])
            self.assertEqual(code, 0)
            self.assertIn("phi (capped)", stdout)
            reports.append(json.loads((out / "phi_report.json").read_text()))
            self.assertEqual(len(pd.read_csv(out / "sigma_min.csv")), 1000)

        first, second = reports
        self.assertEqual(sorted(first), ["bounds", "flavor", "phi", "schema_version"])
        self.assertEqual(sorted(first["phi"]), sorted(second["phi"]))
        self.assertEqual(sorted(first["bounds"]), sorted(second["bounds"]))
        phi = first["phi"]
        self.assertTrue(phi["capped"])
        self.assertLessEqual(phi["point"], phi["uncapped_point"])
        self.assertLessEqual(phi["uncapped_lower"], phi["uncapped_point"])
        self.assertLessEqual(phi["uncapped_point"], phi["uncapped_upper"])
        self.assertEqual(first["bounds"]["lower_bound_steps"], 3)
        self.assertIn("paper_upper_steps", first["bounds"])

    def test_phi_usage_errors(self) -> None:
        for argv in (["--samples", "10"], ["--confidence", "1.5"], ["--n", "1"]):
            code, _, _ = run_cli(["phi"] + argv + ["--out", str(self.root / "bad")])
            self.assertEqual(code, 2, argv)

    def test_verify_single_oracle(self) -> None:
        out = self.root / "verify"
        code, stdout, _ = run_cli(["verify", "--only", "telescoping", "--trials", "250", "--out", str(out)])
        self.assertEqual(code, 0)
        self.assertIn("telescoping: ok", stdout)
        self.assertTrue((out / "telescoping.json").exists())
        self.assertEqual(sorted(RunManifest.load(out / "manifest.json").digests), ["telescoping.json"])
        payload = json.loads((out / "telescoping.json").read_text())
        self.assertEqual(payload["violations"], 0)

    def test_verify_reports_violations(self) -> None:
        def failing(trials: int | None, rng: np.random.Generator) -> InequalityReport:
            return InequalityReport("telescoping", 10, 2, -0.5)

        out = self.root / "failing"
        with patch.dict(ORACLES, {"telescoping": failing}):
            code, stdout, stderr = run_cli(["verify", "--only", "telescoping", "--out", str(out)])
        self.assertEqual(code, 1)
        self.assertIn("telescoping: FAIL", stdout)
        self.assertIn("Violated: telescoping", stderr)

    def test_unknown_oracle(self) -> None:
        code, _, _ = run_cli(["verify", "--only", "nonsense", "--out", str(self.root / "bad")])
        self.assertEqual(code, 2)

    def test_clean_removes_only_recorded_outputs(self) -> None:
        runs = self.root / "runs"
        out = runs / "walk"
        code, _, _ = run_cli(["walk", "--n", "4", "--steps", "60", "--replicates", "100", "--out", str(out)])
        self.assertEqual(code, 0)
        notes = out / "notes.txt"
        notes.write_text("keep me\n")

        code, stdout, _ = run_cli(["clean", str(runs)])
        self.assertEqual(code, 0)
        self.assertIn("Removed the following run outputs:", stdout)
        self.assertIn("walk_summary.csv", stdout)
        self.assertFalse((out / "walk_summary.csv").exists())
        self.assertFalse((out / "tv_proxy.csv").exists())
        self.assertFalse((out / "manifest.json").exists())
        self.assertTrue(notes.exists())

        code, stdout, _ = run_cli(["clean", str(runs)])
        self.assertEqual(code, 0)
        self.assertIn("nothing to remove", stdout)

    def test_clean_keeps_modified_outputs_unless_forced(self) -> None:
        out = self.root / "runs" / "verify"
        code, _, _ = run_cli(["verify", "--only", "telescoping", "--trials", "250", "--out", str(out)])
        self.assertEqual(code, 0)
        (out / "telescoping.json").write_text("{}")

        code, _, stderr = run_cli(["clean", str(self.root / "runs")])
        self.assertEqual(code, 0)
        self.assertIn("pass --force to remove", stderr)
        self.assertTrue((out / "telescoping.json").exists())
        self.assertTrue((out / "manifest.json").exists())

        code, stdout, _ = run_cli(["clean", "--force", str(self.root / "runs")])
        self.assertEqual(code, 0)
        self.assertIn("telescoping.json", stdout)
        self.assertEqual(sorted(path.name for path in out.iterdir()), [])

    def test_clean_without_manifests(self) -> None:
        (self.root / "loose.csv").write_text("a,b\n")
        code, stdout, _ = run_cli(["clean", str(self.root)])
        self.assertEqual(code, 0)
        self.assertIn("No run outputs found, nothing to remove.", stdout)
        self.assertTrue((self.root / "loose.csv").exists())


class ManifestTests(unittest.TestCase):
    def setUp(self) -> None:
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)

    def tearDown(self) -> None:
        self.tmp.cleanup()

    def test_purge_skips_missing_and_changed_files(self) -> None:
        outputs = [self.root / name for name in ("a.csv", "b.csv", "c.csv")]
        for path in outputs:
            path.write_text(path.name)
        manifest = RunManifest("walk", {"n": 3}, seed=1)
        manifest.record_outputs(outputs, self.root)
        manifest.write(self.root / MANIFEST_NAME)
        outputs[0].unlink()
        outputs[1].write_text("edited")

        with self.assertLogs("kaclab.execution.manifest", level="WARNING") as logs:
            removed, kept = manifest.purge(self.root)
        self.assertEqual(removed, [outputs[2]])
        self.assertEqual(kept, [outputs[1]])
        self.assertIn("b.csv", logs.output[0])
        self.assertTrue((self.root / MANIFEST_NAME).exists())

        removed, kept = manifest.purge(self.root, force=True)
        self.assertEqual(removed, [outputs[1], self.root / MANIFEST_NAME])
        self.assertEqual(kept, [])


if __name__ == "__main__":
    unittest.main()
