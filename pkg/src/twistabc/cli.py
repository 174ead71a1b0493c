"""Command line entry point.

Exit status: 0 when every check passes, 1 on a failed check, 2 on bad
configuration or unreadable input.  Reports are JSON with exact rationals
written as "num/den" strings; floats appear only under ``approx`` keys.
Output files go to ``--out``, defaulting to $TWISTABC_OUT or the current
directory.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib

from . import abc_sim, fbar as fbar_mod, feldman, reduction, substitution, trees, twist, words
from .errors import ConfigError, EvenParity, TooLarge, TwistAbcError

OUT_ENV = "TWISTABC_OUT"


class CheckFailed(Exception):
    pass


# -- plumbing ---------------------------------------------------------------------------

def jsonable(x):
    if isinstance(x, Fraction):
        if max(abs(x.numerator), x.denominator).bit_length() > 3000:
            return f"{reduction.int_text(x.numerator)}/{reduction.int_text(x.denominator)}"
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, int):
        return reduction.int_text(x)
    if isinstance(x, float):
        return x
    if isinstance(x, np.integer):
        return jsonable(int(x))
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return [jsonable(v) for v in x.tolist()]
    if isinstance(x, dict):
        return {(k if isinstance(k, str) else ",".join(map(str, k)) if isinstance(k, tuple) else str(k)):
                jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        return [jsonable(v) for v in x]
    if isinstance(x, words.HWord):
        return words.to_sexpr(x)
    return str(x)


def read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None


def load_config(path) -> dict:
    if path is None:
        return {}
    text = read_text(path)
    try:
        if str(path).endswith(".toml"):
            return tomllib.loads(text)
        return json.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def params_from(cfg: dict) -> twist.TwistParams:
    try:
        return twist.derive_params(cfg["C"], cfg["l"])
    except KeyError as exc:
        raise ConfigError(f"params file lacks {exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def read_words(path) -> list:
    """A words file: a serialized collection, or one word per line as an
    S-expression or whitespace separated symbols."""
    text = read_text(path)
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if lines and lines[0].startswith("level="):
        return list(words.load_collection(text).words)
    out = []
    for ln in lines:
        ln = ln.strip()
        out.append(words.from_sexpr(ln) if ln.startswith("(") else
                   words.from_seq(words.parse_symbol(t) for t in ln.split()))
    return out


def out_dir(args) -> Path:
    d = Path(args.out or os.environ.get(OUT_ENV) or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def digest(*parts) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(json.dumps(jsonable(p), sort_keys=True).encode())
    return h.hexdigest()[:16]


def emit(args, report: dict, name: str | None = None):
    text = json.dumps(jsonable(report), indent=1, sort_keys=True)
    if name and getattr(args, "out", None) is not None:
        (out_dir(args) / name).write_text(text + "\n")
    print(text)


def finish(args, command: str, verdicts: dict, body: dict, inputs, t0: float, name=None):
    report = {"command": command, "inputs_digest": digest(inputs), "verdicts": verdicts,
              "timings": {"seconds_approx": round(time.perf_counter() - t0, 3)}, **body}
    emit(args, report, name)
    if not all(verdicts.values()):
        raise CheckFailed(", ".join(k for k, v in verdicts.items() if not v))


# -- twist -----------------------------------------------------------------------------

def cmd_twist_build(args):
    params = params_from(load_config(args.params))
    if not 0 <= args.level < params.levels:
        raise ConfigError(f"level {args.level} outside the params file")
    blocks = read_words(args.blocks)
    op = twist.tilde_twist_op if args.tilde else twist.twist_op
    w = op(args.level, blocks, params)
    text = words.dump_collection(words.WordCollection(args.level + 1, [w]))
    if args.out is not None:
        (out_dir(args) / f"twist_level{args.level + 1}.txt").write_text(text)
    sys.stdout.write(text)


def cmd_twist_verify(args):
    t0 = time.perf_counter()
    cfg = load_config(args.params)
    params = params_from(cfg)
    rng = random.Random(args.seed)
    verdicts, body = {}, {"levels": {}}
    for n in range(params.levels):
        q, k = params.q[n], params.k[n]
        alphabet = list(range(1, 4))
        lengths_ok = rev_ok = True
        for _ in range(args.trials):
            blocks = [words.from_seq(rng.choice(alphabet) for _ in range(q)) for _ in range(k)]
            w = twist.twist_op(n, blocks, params)
            lengths_ok &= w.length == params.q[n + 1]
            if q * k * params.l[n] * q <= args.cap:
                rev_ok &= twist.check_rev_identity(n, blocks, params, args.cap)
        refl = twist.check_reflection_identities(params.p[n], q, n)
        verdicts[f"length_n{n}"] = lengths_ok
        verdicts[f"reverse_n{n}"] = rev_ok
        verdicts[f"reflection_n{n}"] = refl["ok"]
        body["levels"][n] = {"q_next": params.q[n + 1], "k": k, "reflection": refl}
    body["params"] = params.as_dict()
    finish(args, "twist verify", verdicts, body, cfg, t0, "twist_verify.json")


# -- feldman ---------------------------------------------------------------------------

def cmd_feldman_gen(args):
    spec = feldman.FeldmanSpec(args.T, args.N, args.M)
    # blocks inline, so the file stands alone
    pats = [feldman.pattern(spec, k, spec.blocks) for k in range(1, spec.M + 1)]
    text = words.dump_collection(words.WordCollection(0, [p.word for p in pats]))
    if args.out is not None:
        (out_dir(args) / f"feldman_{args.T}_{args.N}_{args.M}.txt").write_text(text)
    sys.stdout.write(text)


def cmd_feldman_verify(args):
    t0 = time.perf_counter()
    spec = feldman.FeldmanSpec(args.T, args.N, args.M)
    rep = feldman.verify_patterns(feldman.generate(spec))
    rep.pop("aligned_counts")
    finish(args, "feldman verify", {"patterns": rep["ok"]}, {"report": rep},
           [args.T, args.N, args.M], t0, "feldman_verify.json")


# -- fbar ------------------------------------------------------------------------------

def cmd_fbar(args):
    a, b = read_words(args.a_file), read_words(args.b_file)
    if len(a) != 1 or len(b) != 1:
        raise ConfigError("each file must hold exactly one word")
    fa, fb = words.flatten(a[0]), words.flatten(b[0])
    v = fbar_mod.fbar(fa, fb, witness=args.witness)
    print(f"{v.value.numerator}/{v.value.denominator}")
    print(f"approx {v.approx:.12g}")
    if args.witness:
        for i, j in v.witness:
            print(i, j)


# -- abc -------------------------------------------------------------------------------

DEFAULT_ABC = {"C": [1, 1], "l": [2, 2]}


def _btuples(args, n, params):
    if args.btuples:
        cfg = load_config(args.btuples)
        try:
            return abc_sim.BTuples.from_rows(n, cfg["s_n"], cfg["rows"])
        except KeyError as exc:
            raise ConfigError(f"b-tuples file lacks {exc}") from None
    if args.s_n:
        return abc_sim.balanced_btuples(n, params, args.s_n, args.s_next or args.s_n)
    return None


def cmd_abc_simulate(args):
    t0 = time.perf_counter()
    cfg = load_config(args.params) or DEFAULT_ABC
    params = params_from(cfg)
    n = args.level
    if not 0 <= n < params.levels:
        raise ConfigError(f"level {n} outside the params file")
    hist = abc_sim.displacement_histogram(n, params)
    verdicts = {"histogram": hist["matches_expected"] and hist["same_for_every_domain"],
                "name_equals_twist": abc_sim.name_matches_twist(n, params)}
    body = {"params": params.as_dict(), "displacement": hist,
            "histogram_list": [hist["histogram"][d] for d in sorted(hist["histogram"])]}
    bt = _btuples(args, n, params)
    if bt is not None:
        mix = abc_sim.verify_mixing_inequality(n, bt, params)
        verdicts["mixing"] = mix["ok"]
        verdicts["R2"] = abc_sim.validate_R2(bt)
        verdicts["R4"] = abc_sim.validate_R4(bt)
        mix = dict(mix)
        mix["measures"] = {",".join(map(str, k)): v for k, v in mix["measures"].items()}
        body["mixing"] = mix
        body["max_deviation_approx"] = float(mix["max_deviation"])
    finish(args, "abc simulate", verdicts, body, [cfg, n], t0, "abc_simulate.json")


def cmd_abc_render(args):
    params = params_from(load_config(args.params) or DEFAULT_ABC)
    text = abc_sim.render_h1(args.level, params)
    if args.out is not None:
        (out_dir(args) / f"h1_level{args.level}.csv").write_text(text)
    sys.stdout.write(text)


# -- subst -----------------------------------------------------------------------------

def _subst_instance(args):
    cfg = load_config(args.config)
    M2 = cfg.get("M2", args.M2)
    inp = substitution.miniature_input(M2=M2)
    omega = substitution.miniature_omega(inp, cfg.get("orders", substitution.MINIATURE_ORDERS))
    return cfg, inp, omega


def cmd_subst_run(args):
    t0 = time.perf_counter()
    cfg, inp, omega = _subst_instance(args)
    res = substitution.substitute(omega, inp)
    d = out_dir(args) if args.out is not None else None
    if d is not None:
        (d / "omega_prime.txt").write_text(
            words.dump_collection(words.WordCollection(1, res.omega_prime)))
    finish(args, "subst run", {"built": True}, {"manifest": res.manifest(),
                                                 "size": len(res.omega_prime)},
           [cfg, args.M2], t0, "subst_manifest.json")


def cmd_subst_verify(args):
    t0 = time.perf_counter()
    cfg, inp, omega = _subst_instance(args)
    res = substitution.substitute(omega, inp)
    rep = substitution.verify_substitution(res, omega, inp)
    cov = {t: substitution.pair_coverage(t)["ok"] for t in (1, 2)}
    verdicts = {"part1": rep["part1"], "part2": rep["part2"], "part3": rep["part3"],
                **{f"coverage_t{t}": ok for t, ok in cov.items()}}
    finish(args, "subst verify", verdicts, {"report": rep}, [cfg, args.M2], t0, "subst_verify.json")


# -- reduce ----------------------------------------------------------------------------

def _tree(args):
    text = read_text(args.tree)
    return trees.TreePrefix.from_text(text, args.n_max)


def _mini(cfg: dict) -> reduction.MiniatureConfig:
    try:
        return reduction.MiniatureConfig(**cfg.get("miniature", cfg))
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def cmd_reduce_build(args):
    t0 = time.perf_counter()
    cfg = load_config(args.config)
    prefix = _tree(args)
    d = out_dir(args)
    if args.mode == "strict":
        led = reduction.strict_ledger(prefix, args.levels, Fraction(cfg.get("beta0", "1/16")))
        verdict = reduction.check_ledger(led, prefix, args.levels)
        body = {"ledger": led.as_dict(), "inequalities": verdict}
        (d / "ledger.json").write_text(json.dumps(jsonable(body), indent=1, sort_keys=True) + "\n")
        finish(args, "reduce build", {"ledger": all(v["holds"] for v in verdict)}, body,
               [cfg, prefix.to_text(), args.levels, args.mode], t0)
        return
    mini = _mini(cfg)
    build = reduction.Build(prefix, args.levels, mini)
    for name, text in reduction.serialize_build(build).items():
        (d / name).write_text(text)
    led = reduction.miniature_ledger(build)
    ledger = {"ledger": led.as_dict(), "inequalities": reduction.check_ledger(led, prefix),
              "nu_bad_bound": {n: reduction.nu_bad_bound(mini.p, [mini.l] * build.top, n)
                               for n in range(1, build.top + 1)},
              "config": mini.as_dict()}
    (d / "ledger.json").write_text(json.dumps(jsonable(ledger), indent=1, sort_keys=True) + "\n")
    (d / "tree.txt").write_text(prefix.to_text())
    (d / "build.json").write_text(json.dumps(
        {"levels": args.levels, "n_max": prefix.n_max, "config": mini.as_dict()},
        indent=1, sort_keys=True) + "\n")
    finish(args, "reduce build", {"built": True},
           {"files": sorted(os.listdir(d)),
            "sizes": [lvl.count for lvl in build.levels]},
           [cfg, prefix.to_text(), args.levels], t0)


def _load_build(d: Path) -> reduction.Build:
    meta = json.loads(read_text(d / "build.json"))
    prefix = trees.TreePrefix.from_text(read_text(d / "tree.txt"), meta["n_max"])
    return reduction.Build(prefix, meta["levels"], reduction.MiniatureConfig(**meta["config"]))


def cmd_reduce_verify(args):
    """Re-check every clause from the level files written by ``reduce build``."""
    t0 = time.perf_counter()
    d = Path(args.dir)
    meta = json.loads(read_text(d / "build.json"))
    prefix = trees.TreePrefix.from_text(read_text(d / "tree.txt"), meta["n_max"])
    mini = reduction.MiniatureConfig(**meta["config"])
    levels = [reduction.init_level0(mini)]
    for n in range(1, meta["levels"] + 1):
        head, rows = reduction.load_level_blocks(read_text(d / f"level{n}.odometer.txt"))
        radix = tuple(int(x) for x in head["radix"].split(","))
        lvl = reduction.ConstructionLevel(
            n=n, s=int(head["s"]), radix=radix, blocks=rows, h=int(head["len"]),
            f_prev=rows.shape[1] // levels[-1].count, p=mini.p,
            groups={s: trees.build_group(prefix, s, n) for s in range(1, int(head["s"]) + 1)},
            masks=reduction._masks(prefix, n, mini.digit))
        prev_s = levels[-1].s
        if lvl.s == prev_s + 1:
            lvl.J = {lvl.s: mini.J}
        levels.append(lvl)
    verdicts, body = {}, {}
    for n in range(len(levels)):
        rep = reduction.verify_specs(levels, prefix, n)
        body[f"level{n}"] = rep
        verdicts[f"level{n}"] = rep["ok"]
    # the class tables on disk must match the declared classes
    for n, lvl in enumerate(levels):
        stored = json.loads(read_text(d / f"level{n}.classes.json"))
        want = {str(s): {str(c): ws for c, ws in lvl.class_table(s).items()}
                for s in range(1, lvl.s + 1)}
        verdicts[f"classes{n}"] = stored == want
    finish(args, "reduce verify", verdicts, {"specs": body}, meta, t0, "verify.json")


def cmd_reduce_eta(args):
    t0 = time.perf_counter()
    if args.dir:
        build = _load_build(Path(args.dir))
    else:
        build = reduction.Build(_tree(args), args.level, _mini(load_config(args.config)))
    prefix = build.prefix
    m = trees.M_of(prefix, args.s)
    if m is None:
        raise EvenParity(f"no node of length {args.s}: no odd parity element exists")
    grp = trees.build_group(prefix, args.s, min(args.level - 1, prefix.n_max))
    odd = [g for g in grp.elements() if len(g) % 2]
    if not odd:
        raise EvenParity(f"G_{args.s} has no odd parity element")
    out, verdicts = {}, {}
    for g in odd:
        try:
            e = reduction.eta_g(build, args.s, g, args.level)
        except TooLarge:
            continue
        name = e["g"]
        out[name] = {"table": {c: v for c, v in e["table"].items()}, "target": e["target"]}
        verdicts[f"{name}:in_rev"] = e["in_rev"]
        verdicts[f"{name}:bijection"] = e["bijection"]
        verdicts[f"{name}:involution"] = e["involution"]
    if not out:
        raise ConfigError(f"no eta_g materializes at level {args.level}")
    finish(args, "reduce eta", verdicts, {"s": args.s, "level": args.level, "eta": out},
           [prefix.to_text(), args.s, args.level], t0, f"eta_s{args.s}.json")


def cmd_reduce_cascade(args):
    t0 = time.perf_counter()
    cfg = load_config(args.config)
    prefix = _tree(args) if args.tree else trees.TreePrefix.full(args.levels + 1)
    beta0 = Fraction(cfg.get("beta0", "1/16"))
    led = reduction.strict_ledger(prefix, args.levels, beta0)
    casc = reduction.bound_cascade(led, prefix, args.levels, strict=False)
    ineq = reduction.check_ledger(led, prefix, args.levels)
    verdicts = {"positive": all(c["holds"] for c in casc.checks if c["check"] in ("beta>0", "alpha>0")),
                "floor": all(c["holds"] for c in casc.checks if c["check"] == "floor"),
                "alpha_M": all(c["holds"] for c in casc.checks if c["check"] == "alpha_M>beta/2"),
                "ledger": all(v["holds"] for v in ineq)}
    body = {"cascade": casc.as_dict(), "ledger": led.as_dict(), "inequalities": ineq,
            "ordering": [c for c in casc.checks if c["check"] == "ordering"]}
    finish(args, "reduce cascade", verdicts, body, [cfg, prefix.to_text(), args.levels], t0,
           "cascade.json")


# -- tree ------------------------------------------------------------------------------

def cmd_tree_check(args):
    t0 = time.perf_counter()
    prefix = _tree(args)
    s_max = prefix.max_length()
    body = {"n_max": prefix.n_max, "nodes": [list(v) for v in prefix.nodes],
            "M": {s: trees.M_of(prefix, s) for s in range(1, s_max + 1)},
            "group_orders": {s: trees.build_group(prefix, s, prefix.n_max).order
                             for s in range(1, s_max + 1)}}
    finish(args, "tree check", {"closed": True}, body, prefix.to_text(), t0)


# -- parser ------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="twistabc", description=__doc__.split("\n")[0])
    ap.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")
    ap.add_argument("--jobs", type=int, default=1, help="worker bound; runs are sequential")
    sub = ap.add_subparsers(dest="group", required=True)

    tw = sub.add_parser("twist").add_subparsers(dest="action", required=True)
    p = tw.add_parser("build")
    p.add_argument("--params", required=True)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--blocks", required=True)
    p.add_argument("--tilde", action="store_true")
    p.set_defaults(func=cmd_twist_build)
    p = tw.add_parser("verify")
    p.add_argument("--params", required=True)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=int, default=words.DEFAULT_CAP)
    p.set_defaults(func=cmd_twist_verify)

    fe = sub.add_parser("feldman").add_subparsers(dest="action", required=True)
    for name, fn in (("gen", cmd_feldman_gen), ("verify", cmd_feldman_verify)):
        p = fe.add_parser(name)
        for k in ("T", "N", "M"):
            p.add_argument(k, type=int)
        p.set_defaults(func=fn)

    p = sub.add_parser("fbar")
    p.add_argument("a_file")
    p.add_argument("b_file")
    p.add_argument("--witness", action="store_true")
    p.set_defaults(func=cmd_fbar)

    ab = sub.add_parser("abc").add_subparsers(dest="action", required=True)
    p = ab.add_parser("simulate")
    p.add_argument("--params")
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--btuples")
    p.add_argument("--s-n", type=int, default=0, help="build balanced b-tuples with this s_n")
    p.add_argument("--s-next", type=int, default=0)
    p.set_defaults(func=cmd_abc_simulate)
    p = ab.add_parser("render-h1")
    p.add_argument("--params")
    p.add_argument("--level", type=int, default=1)
    p.set_defaults(func=cmd_abc_render)

    su = sub.add_parser("subst").add_subparsers(dest="action", required=True)
    for name, fn in (("run", cmd_subst_run), ("verify", cmd_subst_verify)):
        p = su.add_parser(name)
        p.add_argument("--config")
        p.add_argument("--M2", type=int, default=1)
        p.set_defaults(func=fn)

    re_ = sub.add_parser("reduce").add_subparsers(dest="action", required=True)
    p = re_.add_parser("build")
    p.add_argument("--tree", required=True)
    p.add_argument("--n-max", type=int)
    p.add_argument("--levels", type=int, required=True)
    p.add_argument("--mode", choices=reduction.MODES, default="miniature")
    p.add_argument("--config")
    p.set_defaults(func=cmd_reduce_build)
    p = re_.add_parser("verify")
    p.add_argument("dir", help="directory written by reduce build")
    p.set_defaults(func=cmd_reduce_verify)
    p = re_.add_parser("eta")
    p.add_argument("--dir", help="directory written by reduce build")
    p.add_argument("--tree")
    p.add_argument("--n-max", type=int)
    p.add_argument("--config")
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p.set_defaults(func=cmd_reduce_eta)
    p = re_.add_parser("cascade")
    p.add_argument("--tree")
    p.add_argument("--n-max", type=int)
    p.add_argument("--levels", type=int, default=6)
    p.add_argument("--config")
    p.set_defaults(func=cmd_reduce_cascade)

    tr = sub.add_parser("tree").add_subparsers(dest="action", required=True)
    p = tr.add_parser("check")
    p.add_argument("tree")
    p.add_argument("--n-max", type=int)
    p.set_defaults(func=cmd_tree_check)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.group == "reduce" and args.action == "eta" and not (args.dir or args.tree):
        ap.error("reduce eta needs --dir or --tree")
    try:
        args.func(args)
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EvenParity as exc:
        print(json.dumps({"error": "EvenParity", "detail": str(exc)}))
        return 1
    except TwistAbcError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1 if args.action in ("verify", "check") or args.group == "tree" else 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
