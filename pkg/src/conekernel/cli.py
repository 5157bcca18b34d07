"""Scenario-driven command line front end.

Each subcommand reads a JSON scenario, writes a machine-readable report
(JSON, or CSV point cloud) to ``--out`` or to stdout, and a short
human-readable summary to stdout (stderr when the report itself goes to
stdout). Exit codes: 0 success, 1 check failure, 2 usage or parse error.
"""
import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import analysis, oracle
from .cone import Cone, Wedge, cone_from_record
from .errors import ConeKernelError
from .gauge import Euclidean, Gauge, gauge_from_record
from .projector import MAX_ITER, SolverOptions, project


class ScenarioError(ValueError):
    pass


@dataclass
class Scenario:
    gauge: Gauge
    cone: Optional[Cone]
    points: Optional[np.ndarray] = None
    tol: float = 1e-8
    membership_tol: float = 1e-9
    max_iter: int = 10_000
    seed: int = 0
    format: str = "json"
    samples: int = 50
    directions: int = 500
    wedges: int = 50
    name: str = "scenario"
    records: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_dict(cls, d, name="scenario"):
        try:
            g = gauge_from_record(d["gauge"])
            c = cone_from_record(d["cone"]) if d.get("cone") is not None else None
            tols = d.get("tolerances", {})
            pts = d.get("points")
            pts = None if pts is None else np.atleast_2d(np.asarray(pts, dtype=float))
            sc = cls(
                gauge=g,
                cone=c,
                points=pts,
                tol=float(tols.get("tol", 1e-8)),
                membership_tol=float(tols.get("membership", 1e-9)),
                max_iter=int(tols.get("max_iter", 10_000)),
                seed=int(d.get("seed", 0)),
                format=str(d.get("format", "json")),
                samples=int(d.get("samples", 50)),
                directions=int(d.get("directions", 500)),
                wedges=int(d.get("wedges", 50)),
                name=str(d.get("name", name)),
                records={"gauge": d["gauge"], "cone": d.get("cone")},
            )
        except (KeyError, TypeError, ValueError, ConeKernelError) as exc:
            raise ScenarioError(f"invalid scenario: {exc}") from exc
        if c is not None and c.dim != g.dim:
            raise ScenarioError("gauge and cone dimensions differ")
        if pts is not None and pts.shape[1] != g.dim:
            raise ScenarioError("point dimension does not match the gauge")
        if sc.format not in ("json", "csv"):
            raise ScenarioError("format must be json or csv")
        return sc

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            d = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
        return cls.from_dict(d, name=path.stem)

    def to_dict(self):
        d = {
            "name": self.name,
            "gauge": self.records.get("gauge") or self.gauge.to_record(),
            "cone": None if self.cone is None else (self.records.get("cone") or self.cone.to_record()),
            "tolerances": {"tol": self.tol, "membership": self.membership_tol, "max_iter": self.max_iter},
            "seed": self.seed,
            "format": self.format,
            "samples": self.samples,
            "directions": self.directions,
            "wedges": self.wedges,
        }
        if self.points is not None:
            d["points"] = self.points.tolist()
        return d

    @property
    def opts(self):
        return SolverOptions(tol=self.tol, membership_tol=self.membership_tol, max_iter=self.max_iter)

    def rng(self):
        return np.random.default_rng(self.seed)

    def sample_points(self):
        if self.points is not None:
            return self.points
        return self.rng().standard_normal((self.samples, self.gauge.dim)) * 2.0

    def require_cone(self):
        if self.cone is None:
            raise ScenarioError("this command needs a cone in the scenario")
        return self.cone


# --- commands --------------------------------------------------------------------


def cmd_project(sc: Scenario):
    c = sc.require_cone()
    rows, cloud, failed = [], [], 0
    for x in sc.sample_points():
        out = project(sc.gauge, c, x, sc.opts)
        rec = {"x": x.tolist(), **out.to_record()}
        rows.append(rec)
        cloud += [(out.point, "P"), (out.residual, "R")]
        failed += out.status == MAX_ITER
    report = {"command": "project", "scenario": sc.name, "rows": rows, "failures": failed}
    summary = f"projected {len(rows)} points, {failed} did not converge"
    return report, cloud, summary, 1 if failed else 0


def cmd_kernel(sc: Scenario):
    c = sc.require_cone()
    g = sc.gauge
    rng = sc.rng()
    ks = analysis.kernel_sample(g, c, sc.directions, rng, sc.membership_tol)
    if isinstance(c, Wedge):
        conv = analysis.wedge_convexity_verdict(g, c, tol=sc.membership_tol, rng=rng, opts=sc.opts)
        verdict = conv.to_record()
    else:
        v, tested, m, wit = analysis.midpoint_convexity(g, c, ks.directions, sc.membership_tol, rng,
                                                        opts=sc.opts)
        verdict = {"verdict": v, "pairs_tested": tested, "max_margin": m,
                   "witness": None if wit is None else {k: np.asarray(x).tolist() if isinstance(x, np.ndarray) else x
                                                        for k, x in wit.items()}}
    report = {"command": "kernel", "scenario": sc.name, "sample": ks.to_record(), "convexity": verdict}
    cloud = [(d, l) for d, l in zip(ks.directions, ks.labels)]
    counts = {l: ks.labels.count(l) for l in sorted(set(ks.labels))}
    summary = f"kernel directions {counts}; convexity: {verdict['verdict']}"
    return report, cloud, summary, 0


def cmd_wedge_analyze(sc: Scenario):
    c = sc.require_cone()
    if not isinstance(c, Wedge):
        raise ScenarioError("wedge-analyze needs a wedge cone")
    g = sc.gauge
    arc = analysis.wedge_kernel_arc(g, c)
    rep = analysis.wedge_convexity_verdict(g, c, tol=sc.membership_tol, rng=sc.rng(), opts=sc.opts)
    report = {"command": "wedge-analyze", "scenario": sc.name, "arc": arc.tolist(),
              "convexity": rep.to_record(), "agreement": rep.agreement}
    cloud = [(x, "arc") for x in arc]
    if rep.witness is not None:
        cloud.append((rep.witness["midpoint"], "witness"))
    summary = (f"kernel {rep.verdict} (midpoint {rep.midpoint_verdict}, "
               f"meridian rank {rep.coherence.rank}, agreement {rep.agreement})")
    return report, cloud, summary, 0


def cmd_bipolar_scan(sc: Scenario, counterexample_path=None):
    g = sc.gauge
    res = analysis.bipolar_scan(g, sc.wedges, sc.seed, tol=sc.membership_tol)
    report = {"command": "bipolar-scan", "scenario": sc.name, "scan": res.to_record()}
    cloud = []
    summary = f"{res.verdict} after {res.wedges_tested} wedges ({res.note})"
    if res.counterexample is not None:
        cex = replace(sc, cone=res.counterexample, name=sc.name + "-counterexample",
                      records={"gauge": sc.records.get("gauge"), "cone": res.counterexample.to_record()})
        report["counterexample_scenario"] = cex.to_dict()
        cloud = [(x, "arc") for x in analysis.wedge_kernel_arc(g, res.counterexample)]
        if counterexample_path is not None:
            Path(counterexample_path).write_text(_dumps(cex.to_dict()))
            summary += f"; counterexample written to {counterexample_path}"
    return report, cloud, summary, 0


def _check(name, value, tol):
    value = float(value)
    return {"check": name, "max_residual": value, "tolerance": tol, "passed": bool(value <= tol)}


def cmd_verify(sc: Scenario):
    """Retraction identities, homogeneity, Moreau and oracle agreement on sample points."""
    c = sc.require_cone()
    g = sc.gauge
    opts = sc.opts
    X = sc.sample_points()
    res = {k: 0.0 for k in ("idempotence", "P(Rx)=0", "R(Px)=0", "P+R=I", "homogeneity")}
    for x in X:
        o = project(g, c, x, opts)
        p, r = o.point, o.residual
        s = max(1.0, float(np.linalg.norm(x)))
        res["idempotence"] = max(res["idempotence"], np.linalg.norm(project(g, c, p, opts).point - p) / s)
        res["P(Rx)=0"] = max(res["P(Rx)=0"], np.linalg.norm(project(g, c, r, opts).point) / s)
        res["R(Px)=0"] = max(res["R(Px)=0"], np.linalg.norm(project(g, c, p, opts).residual) / s)
        res["P+R=I"] = max(res["P+R=I"], np.linalg.norm(p + r - x) / s)
        for t in (0.0, 0.5, 2.0, 10.0):
            pt = project(g, c, t * x, opts).point
            res["homogeneity"] = max(res["homogeneity"], np.linalg.norm(pt - t * p) / ((1 + t) * s))
    tol = 1e-6
    checks = [_check(k, v, 1e-12 if k == "P+R=I" else tol) for k, v in res.items()]
    if isinstance(g, Euclidean):
        pol = c.polar()
        worst = max(max(np.linalg.norm(z - c.euclidean_project(z) - pol.euclidean_project(z)),
                        abs(float(c.euclidean_project(z) @ pol.euclidean_project(z)))) for z in X)
        checks.append(_check("moreau", worst, 1e-8))
    if g.dim <= oracle.MAX_DIM:
        worst = 0.0
        rng = sc.rng()
        for x in X[: min(5, len(X))]:
            ref = oracle.brute_force_project(g, c, x, rng=rng)
            worst = max(worst, np.linalg.norm(project(g, c, x, opts).point - ref.value))
        checks.append(_check("oracle", worst, 1e-3))
    ok = all(ch["passed"] for ch in checks)
    report = {"command": "verify", "scenario": sc.name, "samples": int(len(X)), "checks": checks,
              "passed": ok}
    lines = [f"{ch['check']:<12} {ch['max_residual']:.3e} <= {ch['tolerance']:.0e}  "
             f"{'pass' if ch['passed'] else 'FAIL'}" for ch in checks]
    table = [[ch["check"], ch["max_residual"], ch["tolerance"], ch["passed"]] for ch in checks]
    return report, table, "\n".join(lines), 0 if ok else 1


# --- output -----------------------------------------------------------------------


def _dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _cloud_csv(cloud, n):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{i + 1}" for i in range(n)] + ["label"])
    for x, label in cloud:
        w.writerow([repr(float(v)) for v in x] + [label])
    return buf.getvalue()


def _table_csv(table):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check", "max_residual", "tolerance", "passed"])
    for row in table:
        w.writerow([row[0], repr(row[1]), repr(row[2]), str(row[3]).lower()])
    return buf.getvalue()


COMMANDS = {
    "project": cmd_project,
    "kernel": cmd_kernel,
    "wedge-analyze": cmd_wedge_analyze,
    "bipolar-scan": cmd_bipolar_scan,
    "verify": cmd_verify,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="conekernel", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=True, help="path to a JSON scenario")
        p.add_argument("--seed", type=int, help="override the scenario seed")
        p.add_argument("--tol", type=float, help="override the solver tolerance")
        p.add_argument("--out", help="write the machine-readable report here")
        p.add_argument("--format", choices=["json", "csv"], help="report format")
        p.add_argument("--directions", type=int, help="sphere-sweep size")
        p.add_argument("--wedges", type=int, help="number of random wedges")
        p.add_argument("--samples", type=int, help="number of random points")
        if name == "bipolar-scan":
            p.add_argument("--counterexample", help="where to write a counterexample scenario "
                                                    "(default: <scenario>.counterexample.json next to --out, "
                                                    "or in the working directory)")
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        sc = Scenario.load(args.scenario)
        over = {k: getattr(args, k) for k in ("seed", "tol", "format", "directions", "wedges", "samples")}
        sc = replace(sc, **{k: v for k, v in over.items() if v is not None})
        if args.command == "bipolar-scan":
            path = args.counterexample
            if path is None:
                base = Path(args.out).parent if args.out else Path(".")
                path = base / f"{sc.name}.counterexample.json"
            report, cloud, summary, code = cmd_bipolar_scan(sc, path)
        else:
            report, cloud, summary, code = COMMANDS[args.command](sc)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConeKernelError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if sc.format == "csv":
        text = _table_csv(cloud) if args.command == "verify" else _cloud_csv(cloud, sc.gauge.dim)
    else:
        text = _dumps(report)
    if args.out:
        Path(args.out).write_text(text)
        print(summary)
    else:
        sys.stdout.write(text)
        print(summary, file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
