"""Command-line front end: distributions, moments, asymptotic tables.

Every subcommand prints a single machine-readable report (JSON by default,
CSV on request).  Exact counts always cross the interface as decimal strings
because JSON numbers cannot hold them; probabilities are rounded to a stated
number of significant digits (6 by default, --digits overrides).
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from math import comb

from . import asymptotics as asy
from . import moments as mom
from . import walks
from .errors import WalkrangeError
from .genfun import Engine, joint_counts, range_distribution
from .pseries import EXACT, choose_backend

SCHEMA_VERSION = 1


def _sig(x, digits):
    return float(f"%.{digits}g" % float(x))


def _report(command, parameters, results, provenance=None):
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "parameters": parameters,
        "results": results,
        "provenance": provenance or {},
    }


def _emit(report, fmt, csv_rows=None, csv_header=None):
    if fmt == "json":
        print(json.dumps(report, sort_keys=True))
    else:
        print(",".join(csv_header))
        for row in csv_rows:
            print(",".join(str(c) for c in row))
    return 0


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_dist(args):
    n, k = args.n, args.k
    backend = choose_backend(2 * n, args.backend)
    digits = args.digits
    total = comb(2 * n, n)
    rows = []
    if backend == EXACT:
        eng = Engine(2 * n, backend=EXACT)
        counts, tail = eng.distribution(n, k, args.lmax)
        results = {"distribution": [], "tail_count": str(tail),
                   "total": str(total)}
        for l in sorted(counts):
            pr = _sig(Fraction(counts[l], total), digits)
            results["distribution"].append(
                {"l": l, "count": str(counts[l]), "probability": pr})
            rows.append([n, k, l, counts[l], pr])
    else:
        eng = Engine(2 * n, backend="float", scale=Fraction(1, 2))
        probs = eng.probabilities(n, k, args.lmax)
        results = {"distribution": [], "total": str(total)}
        for l, p in enumerate(probs):
            results["distribution"].append(
                {"l": l, "probability": _sig(p, digits)})
            rows.append([n, k, l, "", _sig(p, digits)])
    rep = _report("dist", {"n": n, "k": k, "lmax": args.lmax},
                  results, {"backend": backend, "truncation": 2 * n,
                            "digits": digits})
    return _emit(rep, args.format, rows, ["n", "k", "l", "count", "probability"])


def _cmd_range_dist(args):
    n = args.n
    hist = range_distribution(n, args.mmax)
    total = comb(2 * n, n)
    tail = total - sum(hist.values())
    digits = args.digits
    rows = [[n, m, c, _sig(Fraction(c, total), digits)] for m, c in sorted(hist.items())]
    results = {
        "distribution": [{"m": m, "count": str(c),
                          "probability": _sig(Fraction(c, total), digits)}
                         for m, c in sorted(hist.items())],
        "tail_count": str(tail),
        "total": str(total),
    }
    rep = _report("range-dist", {"n": n, "mmax": args.mmax}, results,
                  {"backend": "exact", "digits": digits})
    return _emit(rep, args.format, rows, ["n", "m", "count", "probability"])


def _parse_spec(text):
    spec = {}
    for part in text.split(","):
        k, m = part.split(":")
        spec[int(k)] = spec.get(int(k), 0) + int(m)
    return spec


def _cmd_moments(args):
    spec = _parse_spec(args.spec)
    n = args.n
    eng = Engine(2 * n, backend=EXACT)
    value = eng.mixed_moment(spec, n)
    total = comb(2 * n, n)
    digits = args.digits
    results = {"value": str(value),
               "normalized": _sig(Fraction(value, total), digits),
               "total": str(total)}
    rep = _report("moments", {"spec": args.spec, "n": n}, results,
                  {"backend": "exact", "digits": digits})
    return _emit(rep, args.format,
                 [[args.spec, n, value, results["normalized"]]],
                 ["spec", "n", "value", "normalized"])


def _cmd_first_moment(args):
    n, k, d = args.n, args.k, args.d
    digits = args.digits
    results = {"asymptotic": _sig(mom.asymptotic_first_moment(n, k, d), digits),
               "asymptotic_range": _sig(mom.asymptotic_range_moment(n, d), digits)}
    if d == 1:
        results["expected_points"] = _sig(mom.mean_point_count(n, k), digits)
        results["expected_range"] = _sig(mom.mean_range(n), digits)
    rep = _report("first-moment", {"n": n, "k": k, "d": d}, results,
                  {"digits": digits})
    rows = [[d, k, n, results.get("expected_points", ""),
             results["asymptotic"]]]
    return _emit(rep, args.format, rows,
                 ["d", "k", "n", "expected_points", "asymptotic"])


def _cmd_asymp(args):
    digits = args.digits
    if args.xi is not None:
        val = asy.range_moment_limit(args.xi)
        rep = _report("asymp", {"xi": args.xi}, {"xi": _sig(val, digits)},
                      {"digits": digits})
        return _emit(rep, args.format, [[args.xi, _sig(val, digits)]],
                     ["r", "xi"])
    if args.table == 1:
        eng = Engine(78, backend=EXACT)
        counts, _ = eng.distribution(39, 2, args.lmax)
        total = comb(78, 39)
        tail_model = asy.doublepoint_tail()
        grid = [250, 500, 1000, 2000]
        fl = Engine(2 * grid[-1], backend="float", scale=Fraction(1, 2))
        rows, entries = [], []
        for l in sorted(counts):
            pr = _sig(Fraction(counts[l], total), digits)
            if l <= 2:
                limit, _tol = asy.extrapolate_probability(2, l, grid, engine=fl)
                method = "extrapolated"
            else:
                limit = tail_model.predict(l)
                method = "tail-law"
            entries.append({"l": l, "count": str(counts[l]),
                            "probability": pr,
                            "limit_probability": _sig(limit, digits),
                            "limit_method": method})
            rows.append([l, counts[l], pr, _sig(limit, digits), method])
        rep = _report("asymp", {"table": 1, "lmax": args.lmax},
                      {"doublepoints_n39": entries},
                      {"backend": "exact+float", "digits": digits})
        return _emit(rep, args.format, rows,
                     ["l", "count", "probability", "limit", "method"])
    if args.table == 2:
        kmax = args.kmax or 5
        entries, rows = [], []
        eng = Engine(2 * args.n, backend="float", scale=Fraction(1, 2))
        for k in range(2, kmax + 1):
            model = asy.tail_rate_fit(k, args.n, engine=eng)
            rates = [_sig(r, digits) for r in model.rates]
            entries.append({"k": k, "rates": rates,
                            "residual": _sig(model.residual, 3)})
            rows.append([k] + rates)
        rep = _report("asymp", {"table": 2, "kmax": kmax, "n": args.n},
                      {"tail_rates": entries}, {"digits": digits})
        return _emit(rep, args.format, rows, ["k", "rates..."])
    if args.table == 3:
        kmax = args.kmax or 5
        ks = list(range(1, kmax + 1)) + [100]
        entries, rows = [], []
        for i, k1 in enumerate(ks):
            for k2 in ks[i:]:
                v = asy.second_moment_limit(k1, k2)
                entries.append({"k1": k1, "k2": k2,
                                "covariance": _sig(v, digits)})
                rows.append([k1, k2, _sig(v, digits)])
        rep = _report("asymp", {"table": 3, "kmax": kmax},
                      {"covariances": entries}, {"digits": digits})
        return _emit(rep, args.format, rows, ["k1", "k2", "covariance"])
    raise WalkrangeError("asymp needs --table 1|2|3 or --xi R")


def _cmd_oracle(args):
    tracked = tuple(int(t) for t in args.track.split(",")) if args.track else ()
    cnt = walks.oracle_counts(args.n, args.d, tracked,
                              include_range=args.range)
    results = {}
    rows = []
    for key, c in sorted(cnt.items()):
        parts = [f"N{2 * k}={v}" for k, v in zip(tracked, key)]
        if args.range:
            parts.append(f"ran={key[-1]}")
        name = ",".join(parts)
        results[name] = c
        rows.append([name, c])
    rep = _report("oracle", {"n": args.n, "d": args.d, "track": args.track,
                             "range": args.range},
                  {"counts": results}, {"method": "exhaustive"})
    return _emit(rep, args.format, rows, ["profile", "count"])


def _cmd_verify(args):
    nmax = args.n_max
    cases = []
    ok_all = True
    for n in range(1, nmax + 1):
        eng = Engine(2 * n, backend=EXACT)
        for k in (1, 2, 3):
            cnt, tail = eng.distribution(n, k, 2 * n)
            oc = walks.oracle_counts(n, 1, (k,))
            want = {l: c for (l,), c in oc.items() if c}
            got = {l: c for l, c in cnt.items() if c}
            ok = got == want and tail == 0
            ok_all &= ok
            cases.append({"case": f"n={n} N_{2 * k} distribution",
                          "status": "PASS" if ok else "FAIL"})
        hist = range_distribution(n)
        oc = walks.oracle_counts(n, 1, (), include_range=True)
        want = {m: c for (m,), c in oc.items()}
        ok = hist == want
        ok_all &= ok
        cases.append({"case": f"n={n} range histogram",
                      "status": "PASS" if ok else "FAIL"})
        jc = joint_counts(eng, n, (1, 2, 3))
        want = {key: c for key, c in walks.oracle_counts(n, 1, (1, 2, 3)).items()}
        ok = jc == want
        ok_all &= ok
        cases.append({"case": f"n={n} joint (N2,N4,N6)",
                      "status": "PASS" if ok else "FAIL"})
    for c in cases:
        print(f"{c['status']}: {c['case']}", file=sys.stderr)
    rep = _report("verify", {"n_max": nmax},
                  {"cases": cases,
                   "mismatches": sum(c["status"] == "FAIL" for c in cases)})
    _emit(rep, args.format, [[c["case"], c["status"]] for c in cases],
          ["case", "status"])
    return 0 if ok_all else 1


# ---------------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--digits", type=int, default=6,
                        help="significant digits for probabilities")
    common.add_argument("--threads", type=int, default=1,
                        help="accepted for interface compatibility; "
                             "computation is single-threaded")
    p = argparse.ArgumentParser(
        prog="walkrange",
        description="Exact and asymptotic statistics of the k-multiple "
                    "point range of closed simple random walks.")
    sub = p.add_subparsers(dest="command", required=True)

    def add_parser(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    d = add_parser("dist", help="distribution of N_{2k} at length 2n")
    d.add_argument("--n", type=int, required=True)
    d.add_argument("--k", type=int, required=True)
    d.add_argument("--lmax", type=int, required=True)
    d.add_argument("--backend", choices=("exact", "float"), default=None)
    d.set_defaults(fn=_cmd_dist)

    r = add_parser("range-dist", help="distribution of the range")
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--mmax", type=int, default=None)
    r.set_defaults(fn=_cmd_range_dist)

    m = add_parser("moments", help="mixed binomial moments")
    m.add_argument("--spec", required=True, help='e.g. "1:2,3:2"')
    m.add_argument("--n", type=int, required=True)
    m.set_defaults(fn=_cmd_moments)

    f = add_parser("first-moment", help="first moments, any dimension")
    f.add_argument("--d", type=int, required=True)
    f.add_argument("--k", type=int, required=True)
    f.add_argument("--n", type=int, required=True)
    f.set_defaults(fn=_cmd_first_moment)

    a = add_parser("asymp", help="asymptotic tables and limits")
    a.add_argument("--table", type=int, choices=(1, 2, 3))
    a.add_argument("--xi", type=int)
    a.add_argument("--kmax", type=int)
    a.add_argument("--lmax", type=int, default=10)
    a.add_argument("--n", type=int, default=2000,
                   help="length parameter for rate fitting (table 2)")
    a.set_defaults(fn=_cmd_asymp)

    o = add_parser("oracle", help="exhaustive enumeration counts")
    o.add_argument("--n", type=int, required=True)
    o.add_argument("--d", type=int, default=1)
    o.add_argument("--track", default="")
    o.add_argument("--range", action="store_true")
    o.set_defaults(fn=_cmd_oracle)

    v = add_parser("verify", help="oracle-equivalence suite")
    v.add_argument("--n-max", type=int, default=6)
    v.set_defaults(fn=_cmd_verify)
    return p


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except WalkrangeError as exc:
        err = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        print(json.dumps(err, sort_keys=True))
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
