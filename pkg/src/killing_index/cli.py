"""Command-line interface: ``generate``, ``analyze`` and ``certify``.

Exit codes
----------
generate: 0 success, 2 parameter error.
analyze / certify: 0 all checks pass, 1 a check fails, 3 resolution
insufficient, 4 input, validation or solver error.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .ambient import AmbientSpace
from .fem import (
    SpectrumError,
    assemble_jacobi_operators,
    cmc_spectrum,
    default_tol_zero,
    jacobi_spectrum,
)
from .generators import GENERATORS, GeneratorError
from .geometry import GeometryError, shape_operator
from .hodge import HarmonicBasisError, dec_operators, harmonic_basis
from .kernels import BACKEND
from .killing_tests import (
    BOUND_WITNESSED,
    CONSTRAINTS_FULL_RANK,
    MINIMALITY_TOL,
    RESOLUTION_INSUFFICIENT,
    CertificateError,
    ceil_div3,
    cmc_certificate,
    lemma1_residuals,
    lemma2_residual,
    theorem_certificate,
)
from .mesh import AMBIENT_TAGS, MeshError, load_mesh, topology, write_mesh

SCHEMA = "1"
EXIT_OK, EXIT_FAIL, EXIT_PARAM, EXIT_RESOLUTION, EXIT_ERROR = 0, 1, 2, 3, 4
DEFAULT_EIGS = 12
DEFAULT_HARMONIC_TOL = 1e-8

# generator name -> (cli parameter, default) pairs
GENERATOR_PARAMS = {
    "clifford": (("nu", 32), ("nv", 32)),
    "equatorial-sphere": (("subdiv", 4),),
    "flat-torus": (("n", 8), ("normal_axis", 2)),
    "round-sphere": (("r", 1.0), ("subdiv", 4)),
    "schwarz-p": (("resolution", 24),),
}
_ALL_PARAMS = ("nu", "nv", "subdiv", "n", "normal_axis", "r", "resolution")


class ParameterError(ValueError):
    pass


def _generator_kwargs(name: str, args) -> dict:
    if name not in GENERATORS:
        raise ParameterError(f"unknown generator {name!r} (choose from {', '.join(sorted(GENERATORS))})")
    allowed = dict(GENERATOR_PARAMS[name])
    extra = [p for p in _ALL_PARAMS if getattr(args, p, None) is not None and p not in allowed]
    if extra:
        raise ParameterError(f"{name} does not take --{extra[0].replace('_', '-')}")
    return {p: (getattr(args, p) if getattr(args, p, None) is not None else d) for p, d in allowed.items()}


def run_generator(name: str, args):
    kwargs = _generator_kwargs(name, args)
    try:
        return GENERATORS[name](**kwargs), kwargs
    except GeneratorError as exc:
        raise ParameterError(str(exc)) from exc


# -- report --------------------------------------------------------------------


def bound_line(index: int, nullity: int, genus: int) -> str:
    n, m = index + nullity, ceil_div3(genus)
    return f"Ind+Null = {n} ≥ ⌈g/3⌉ = {m}: {'PASS' if n >= m else 'FAIL'}"


def corollary_line(index: int, genus: int) -> str:
    m = ceil_div3(genus) - 1
    return f"Ind = {index} ≥ ⌈g/3−1⌉ = {m}: {'PASS' if index >= m else 'FAIL'}"


@dataclass
class AnalysisReport:
    input: dict
    topology: dict
    geometry: dict | None = None
    spectrum: dict | None = None
    cmc_spectrum: dict | None = None
    harmonic: dict | None = None
    lemmas: dict | None = None
    certificate: dict | None = None
    cmc_certificate: dict | None = None
    notes: list = field(default_factory=list)
    timestamp: str | None = None

    def _theorem_applies(self) -> bool:
        return self.certificate is not None and "skipped" not in self.certificate

    def checks(self) -> dict:
        """PASS/FAIL/RESOLUTION_INSUFFICIENT per enabled check, recomputed from fields."""
        out = {}
        g = self.topology["genus"]
        if self.spectrum is not None:
            sp = self.spectrum
            if sp["truncated"]:
                out["spectrum_resolved"] = RESOLUTION_INSUFFICIENT
            if self._theorem_applies():
                line = bound_line(sp["index"], sp["nullity"], g)
                out["bound"] = "PASS" if line.endswith("PASS") else "FAIL"
        if self.cmc_spectrum is not None:
            sp = self.cmc_spectrum
            if sp["truncated"]:
                out["cmc_spectrum_resolved"] = RESOLUTION_INSUFFICIENT
            line = corollary_line(sp["index"], g)
            out["corollary"] = "PASS" if line.endswith("PASS") else "FAIL"
        if self.harmonic is not None:
            h = self.harmonic
            if "error" in h:
                out["harmonic_basis"] = RESOLUTION_INSUFFICIENT
            else:
                ok = h["dimension"] == 2 * g and h["max_residual"] <= h["harmonic_tol"]
                out["harmonic_basis"] = "PASS" if ok else "FAIL"
        for key, cert, spec in (("certificate", self.certificate, self.spectrum),
                                ("cmc_certificate", self.cmc_certificate, self.cmc_spectrum)):
            if cert is None or "skipped" in cert:
                continue
            verdict = cert["verdict"]
            if verdict == RESOLUTION_INSUFFICIENT:
                out[key] = RESOLUTION_INSUFFICIENT
            elif verdict == CONSTRAINTS_FULL_RANK:
                out[key] = "DIAGNOSTIC" if cert.get("forced") else "FAIL"
            else:
                out[key] = "PASS"
                # soundness: a witnessed bound must agree with the computed counts
                if spec is not None:
                    count = spec["index"] + (0 if key == "cmc_certificate" else spec["nullity"])
                    out[key + "_soundness"] = "PASS" if count >= cert["k"] else "FAIL"
        return out

    def status(self) -> str:
        vals = set(self.checks().values())
        if "FAIL" in vals:
            return "FAIL"
        if RESOLUTION_INSUFFICIENT in vals:
            return RESOLUTION_INSUFFICIENT
        return "PASS"

    def exit_code(self) -> int:
        return {"PASS": EXIT_OK, "FAIL": EXIT_FAIL, RESOLUTION_INSUFFICIENT: EXIT_RESOLUTION}[self.status()]

    def to_dict(self) -> dict:
        g = self.topology["genus"]
        out = {"schema": SCHEMA, "version": __version__, "backend": BACKEND}
        if self.timestamp is not None:
            out["timestamp"] = self.timestamp
        out.update({
            "input": self.input,
            "topology": self.topology,
            "geometry": self.geometry,
            "spectrum": self.spectrum,
            "cmc_spectrum": self.cmc_spectrum,
            "harmonic": self.harmonic,
            "lemmas": self.lemmas,
            "certificate": self.certificate,
            "cmc_certificate": self.cmc_certificate,
        })
        if self.spectrum is not None and self._theorem_applies():
            out["bound"] = bound_line(self.spectrum["index"], self.spectrum["nullity"], g)
        if self.cmc_spectrum is not None:
            out["corollary"] = corollary_line(self.cmc_spectrum["index"], g)
        out["checks"] = self.checks()
        out["status"] = self.status()
        out["notes"] = list(self.notes)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False, allow_nan=True) + "\n"


# -- pipeline ------------------------------------------------------------------


@dataclass
class Source:
    description: dict
    mesh: object
    analytic: object = None
    oracle: list | None = None
    cmc_oracle: list | None = None
    approximate: bool = False


def load_source(args) -> Source:
    if args.generator:
        out, kwargs = run_generator(args.generator, args)
        if args.ambient and args.ambient != out.mesh.ambient_tag:
            raise MeshError(f"generator {args.generator} lives in {out.mesh.ambient_tag}, not {args.ambient}")
        desc = {"kind": "generator", "name": args.generator, "params": kwargs,
                "ambient": out.mesh.ambient_tag}
        return Source(desc, out.mesh, out.analytic, out.oracle, out.cmc_oracle, out.approximate)
    if not args.input:
        raise ParameterError("give an input mesh file or --generator NAME")
    mesh = load_mesh(args.input, args.ambient)
    return Source({"kind": "file", "path": args.input, "ambient": mesh.ambient_tag}, mesh)


def _is_minimal(geom) -> bool:
    return float(np.max(np.abs(geom.H))) <= MINIMALITY_TOL[geom.source_tag]


def _is_cmc(geom) -> bool:
    return geom.H_deviation() <= MINIMALITY_TOL[geom.source_tag]


def _spectrum_dict(spec, oracle=None):
    d = spec.to_dict()
    if oracle:
        lam = []
        for value, mult in oracle:
            lam += [float(value)] * mult
            if len(lam) >= len(spec.eigenvalues):
                break
        d["oracle"] = lam[: len(spec.eigenvalues)]
    return d


def _eigs(requested: int, k: int, num_vertices: int, constrained: bool) -> int:
    top = num_vertices - (2 if constrained else 1)
    return max(1, min(max(requested, k), top))


def analyze(args) -> AnalysisReport:
    src = load_source(args)
    mesh = src.mesh
    amb = AmbientSpace.for_mesh(mesh)
    topo = topology(mesh)
    g = topo.genus
    report = AnalysisReport(src.description, topo.to_dict())
    if not args.no_timestamp:
        report.timestamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    allow_approx = bool(args.allow_approximate or src.approximate)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        geom = shape_operator(mesh, amb, src.analytic)
        ops = assemble_jacobi_operators(mesh, geom, amb)
    report.notes += sorted({str(w.message) for w in caught})
    report.geometry = geom.summary()
    minimal = _is_minimal(geom)
    if src.approximate:
        report.notes.append("approximate input: the surface is only approximately minimal")

    oracle = src.cmc_oracle if args.cmc else src.oracle
    tol = args.tol_zero if args.tol_zero is not None else default_tol_zero(ops, oracle)

    k_thm = ceil_div3(g) if args.force_k is None or args.cmc else args.force_k
    m = _eigs(args.eigs, k_thm, mesh.num_vertices, False)
    spec = jacobi_spectrum(ops, m, tol)
    report.spectrum = _spectrum_dict(spec, src.oracle)
    spec_cmc = None
    if args.cmc:
        k_cmc = (ceil_div3(g) - 1) if args.force_k is None else args.force_k
        spec_cmc = cmc_spectrum(ops, _eigs(args.eigs, k_cmc, mesh.num_vertices, True), tol)
        report.cmc_spectrum = _spectrum_dict(spec_cmc, src.cmc_oracle)

    basis = None
    try:
        basis = harmonic_basis(mesh, dec_operators(mesh, geom), g, args.harmonic_tol, geom=geom)
        report.harmonic = basis.to_dict()
        report.harmonic["max_residual"] = basis.max_residual
        report.harmonic["harmonic_tol"] = args.harmonic_tol
    except HarmonicBasisError as exc:
        report.harmonic = {"error": str(exc), "harmonic_tol": args.harmonic_tol}

    # identity checks
    lemmas: dict = {}
    xi0 = basis.fields[0] if basis is not None and basis.dimension else None
    r1, r2, r3 = lemma1_residuals(mesh, amb, geom, xi0)
    lemmas["lemma1"] = {"r1": r1, "r2": r2, "r3": r3}
    if basis is None:
        lemmas["lemma2"] = {"skipped": "harmonic basis unavailable"}
    elif basis.dimension == 0:
        lemmas["lemma2"] = {"skipped": "empty harmonic basis"}
    elif not (_is_cmc(geom) or allow_approx):
        lemmas["lemma2"] = {"skipped": "mean curvature is not constant"}
    else:
        res = [lemma2_residual(mesh, amb, geom, ops, basis.fields[a], basis.forms[:, a],
                               harmonic_tol=max(args.harmonic_tol, basis.max_residual),
                               allow_approximate=allow_approx)
               for a in range(basis.dimension)]
        lemmas["lemma2"] = {"fields": [r.to_dict() for r in res],
                            "max_rel_residual": max(r.rel_residual for r in res)}
    report.lemmas = lemmas

    if basis is not None:
        if minimal or allow_approx:
            cert = theorem_certificate(mesh, amb, geom, ops, spec, basis,
                                       force_k=None if args.cmc else args.force_k,
                                       allow_approximate=allow_approx)
            report.certificate = cert.to_dict()
            report.certificate["forced"] = args.force_k is not None and not args.cmc
        else:
            report.certificate = {"skipped": "surface is not minimal"}
            report.notes.append("bound check not applicable: surface is not minimal")
        if args.cmc:
            if _is_cmc(geom) or allow_approx:
                cert = cmc_certificate(mesh, amb, geom, ops, spec_cmc, basis, force_k=args.force_k,
                                       allow_approximate=allow_approx)
                report.cmc_certificate = cert.to_dict()
                report.cmc_certificate["forced"] = args.force_k is not None
            else:
                report.cmc_certificate = {"skipped": "mean curvature is not constant"}
    if args.csv:
        spec.write_csv(args.csv)
        if spec_cmc is not None:
            spec_cmc.write_csv(_cmc_csv_path(args.csv))
    return report


def _cmc_csv_path(path: str) -> str:
    stem, dot, ext = path.rpartition(".")
    return f"{stem}_cmc.{ext}" if dot else f"{path}_cmc"


def certify(args):
    src = load_source(args)
    mesh = src.mesh
    amb = AmbientSpace.for_mesh(mesh)
    g = topology(mesh).genus
    allow_approx = bool(args.allow_approximate or src.approximate)
    if g == 0:
        return None, "empty harmonic basis, bound trivial (⌈0/3⌉ = 0)"
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        geom = shape_operator(mesh, amb, src.analytic)
        ops = assemble_jacobi_operators(mesh, geom, amb)
    oracle = src.cmc_oracle if args.cmc else src.oracle
    tol = args.tol_zero if args.tol_zero is not None else default_tol_zero(ops, oracle)
    if args.cmc:
        k = ceil_div3(g) - 1 if args.force_k is None else args.force_k
    else:
        k = ceil_div3(g) if args.force_k is None else args.force_k
    spec = None
    if k - 1 > 0:
        solver = cmc_spectrum if args.cmc else jacobi_spectrum
        spec = solver(ops, _eigs(k - 1, k - 1, mesh.num_vertices, args.cmc), tol)
    basis = harmonic_basis(mesh, dec_operators(mesh, geom), g, args.harmonic_tol, geom=geom)
    fn = cmc_certificate if args.cmc else theorem_certificate
    cert = fn(mesh, amb, geom, ops, spec, basis, force_k=args.force_k, allow_approximate=allow_approx)
    return cert, None


# -- argument parsing ----------------------------------------------------------


def _add_generator_params(p):
    p.add_argument("--nu", type=int)
    p.add_argument("--nv", type=int)
    p.add_argument("--subdiv", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--normal-axis", dest="normal_axis", type=int)
    p.add_argument("--r", type=float)
    p.add_argument("--resolution", type=int)


def _add_pipeline_options(p):
    p.add_argument("input", nargs="?", help="mesh file (OFF, 4OFF or OBJ)")
    p.add_argument("--generator", choices=sorted(GENERATORS), help="use a built-in surface instead of a file")
    _add_generator_params(p)
    p.add_argument("--ambient", choices=AMBIENT_TAGS)
    p.add_argument("--eigs", type=int, default=DEFAULT_EIGS, help="number of eigenpairs (default %(default)s)")
    p.add_argument("--tol-zero", dest="tol_zero", type=float)
    p.add_argument("--harmonic-tol", dest="harmonic_tol", type=float, default=DEFAULT_HARMONIC_TOL)
    p.add_argument("--cmc", action="store_true", help="volume-preserving (mean-zero) variations")
    p.add_argument("--force-k", dest="force_k", type=int, help="diagnostic: override the target rank")
    p.add_argument("--allow-approximate", dest="allow_approximate", action="store_true",
                   help="accept surfaces that are only approximately minimal or CMC")
    p.add_argument("--json", metavar="PATH", help="write the JSON report ('-' for stdout)")
    p.add_argument("--no-timestamp", dest="no_timestamp", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="killing-index", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a built-in surface as extended OFF")
    gen.add_argument("name", help=", ".join(sorted(GENERATORS)))
    _add_generator_params(gen)
    gen.add_argument("-o", "--output", required=True)

    ana = sub.add_parser("analyze", help="full report: spectrum, harmonic forms, identities, certificate")
    _add_pipeline_options(ana)
    ana.add_argument("--csv", metavar="PATH", help="write the spectrum as CSV")

    cer = sub.add_parser("certify", help="build only the index-bound certificate")
    _add_pipeline_options(cer)
    return parser


def _write_json(text: str, path: str | None) -> None:
    if path == "-":
        sys.stdout.write(text)
    elif path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _print_summary(report: AnalysisReport) -> None:
    d = report.to_dict()
    t = d["topology"]
    print(f"V={t['V']} E={t['E']} F={t['F']} chi={t['chi']} genus={t['genus']}")
    if d["spectrum"]:
        s = d["spectrum"]
        print(f"index={s['index']} nullity={s['nullity']} tol_zero={s['tol_zero']:.4g} "
              f"gap={s['certificate_gap']:.4g}")
    if d["cmc_spectrum"]:
        s = d["cmc_spectrum"]
        print(f"cmc index={s['index']} nullity={s['nullity']}")
    cert = d["certificate"]
    if cert and "verdict" in cert:
        print(f"certificate k={cert['k']} verdict={cert['verdict']}")
    for key in ("bound", "corollary"):
        if key in d:
            print(d[key])
    for note in d["notes"]:
        print(f"note: {note}")
    print(f"status: {d['status']}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "generate":
            out, kwargs = run_generator(args.name, args)
            comments = [f"generator {args.name} " + " ".join(f"{k}={v}" for k, v in kwargs.items())]
            write_mesh(out.mesh, args.output, header_comments=comments)
            print(f"wrote {args.output}: V={out.mesh.num_vertices} F={out.mesh.num_faces}")
            return EXIT_OK
        if args.command == "analyze":
            report = analyze(args)
            if args.json == "-":
                _write_json(report.to_json(), "-")
            else:
                _write_json(report.to_json(), args.json)
                _print_summary(report)
            return report.exit_code()
        cert, message = certify(args)
        if cert is None:
            print(message)
            _write_json(json.dumps({"schema": SCHEMA, "certificate": None, "message": message},
                                   indent=2, ensure_ascii=False) + "\n", args.json)
            return EXIT_OK
        d = cert.to_dict()
        _write_json(json.dumps({"schema": SCHEMA, "certificate": d}, indent=2, ensure_ascii=False) + "\n",
                    args.json)
        if args.json != "-":
            print(f"k={cert.k} genus={cert.genus} constraints={d['constraint_rows']}x{d['constraint_cols']}")
            if cert.q_sum is not None:
                print(f"q_sum={cert.q_sum:.6g} rhs={cert.rhs:.6g} slack={cert.slack:.3g}")
            for note in cert.notes:
                print(f"note: {note}")
            print(f"verdict: {cert.verdict}")
        if cert.verdict == BOUND_WITNESSED:
            return EXIT_OK
        if cert.verdict == RESOLUTION_INSUFFICIENT:
            return EXIT_RESOLUTION
        return EXIT_OK if args.force_k is not None else EXIT_FAIL
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except HarmonicBasisError as exc:
        print(f"resolution insufficient: {exc}", file=sys.stderr)
        return EXIT_RESOLUTION
    except (OSError, MeshError, GeometryError, SpectrumError, CertificateError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
