"""Command-line interface: ``bpnmf synth|fit|separate|eval|diag``.

Options come from three layers, later ones winning: built-in defaults, an
optional ``--config`` JSON file whose keys are the long option names
(``burn_in`` or ``burn-in``), and explicit flags.

Every command appends one JSON line to ``manifest.jsonl`` in its output
directory.  On failure a single ``bpnmf: error: code=<code>: <message>``
line goes to stderr and the exit status is non-zero.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import secrets
import sys
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path

import numpy as np

from . import audio, checkpoint, mask
from .errors import BpnmfError, FormatError, ValidationError
from .gibbs import GibbsConfig, run_gibbs
from .metrics import NOTE, evaluate
from .model import FitReport, Hyperparams, active_components, as_counts
from .ssmf import SsmfConfig, run_ssmf
from .synthetic import SyntheticConfig, generate


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def default_threads() -> int:
    env = os.environ.get("BPNMF_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValidationError("invalid-config", f"BPNMF_THREADS={env!r} is not an integer") from None
    return os.cpu_count() or 1


class Run:
    """Collects outputs of one command and writes its manifest line."""

    def __init__(self, argv, out_dir: Path, config: dict, seed=None):
        self.argv = list(argv)
        self.out_dir = out_dir
        self.config = config
        self.seed = seed
        self.outputs: list[Path] = []
        self.start = datetime.now(timezone.utc).isoformat()

    def add(self, path: Path) -> Path:
        self.outputs.append(Path(path))
        return Path(path)

    def finish(self):
        missing = [str(p) for p in self.outputs if not p.exists()]
        if missing:
            raise BpnmfError("output-missing", f"outputs not written: {missing}")
        entry = {
            "command": self.argv,
            "config": self.config,
            "seed": self.seed,
            "version": _version(),
            "kernel": mask.DEFAULT_KERNEL,
            "start": self.start,
            "end": datetime.now(timezone.utc).isoformat(),
            "outputs": {str(p.relative_to(self.out_dir)) if p.is_relative_to(self.out_dir) else str(p):
                        _sha256(p) for p in self.outputs},
        }
        with open(self.out_dir / "manifest.jsonl", "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, sort_keys=True, default=str) + "\n")


def _load_config_file(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise
    except json.JSONDecodeError as exc:
        raise FormatError("format-mismatch", f"config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise FormatError("format-mismatch", f"config {path} must be a JSON object")
    return {k.replace("-", "_"): v for k, v in cfg.items()}


def _merge(args, defaults: dict) -> dict:
    """defaults < config file < explicit flags (flags default to None)."""
    merged = dict(defaults)
    file_cfg = _load_config_file(getattr(args, "config", None))
    unknown = set(file_cfg) - set(defaults)
    if unknown:
        raise ValidationError("invalid-config", f"unknown config keys {sorted(unknown)}")
    merged.update(file_cfg)
    for key in defaults:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    return merged


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _seed(value):
    return secrets.randbits(63) if value is None else int(value)


# ---------------------------------------------------------------- synth

SYNTH_DEFAULTS = {"F": 30, "T": 300, "L": 50, "gammaW_hyper": [1.0, 1.0], "gammaH_hyper": [5.0, 5.0],
                  "beta_pi": [0.05, 0.95], "seed": None, "paper_scale": False}


def cmd_synth(args, argv):
    cfg = _merge(args, SYNTH_DEFAULTS)
    if cfg["paper_scale"]:
        cfg.update(F=75, T=1000, L=100)
    cfg["seed"] = _seed(cfg["seed"])
    sc = SyntheticConfig(F=int(cfg["F"]), T=int(cfg["T"]), L=int(cfg["L"]),
                         gammaW_hyper=tuple(cfg["gammaW_hyper"]), gammaH_hyper=tuple(cfg["gammaH_hyper"]),
                         beta_pi=tuple(cfg["beta_pi"]), seed=cfg["seed"])
    out = _out_dir(args.out)
    run = Run(argv, out, cfg, cfg["seed"])
    X, truth = generate(sc)
    meta = {"synthetic": sc.to_dict()}
    checkpoint.save(run.add(out / "data.json"), checkpoint.Checkpoint("data", {"X": X}, seed=sc.seed, meta=meta))
    checkpoint.save(run.add(out / "truth.json"),
                    checkpoint.Checkpoint("truth", {"W": truth.W, "H": truth.H, "S": truth.S, "pi": truth.pi},
                                          seed=sc.seed, meta=meta))
    run.finish()
    print(f"wrote {X.shape[0]}x{X.shape[1]} counts to {out / 'data.json'}")


# ------------------------------------------------------------------ fit

FIT_DEFAULTS = {"algorithm": "ssmf", "K": 100, "seed": None, "a": 0.5, "b": 0.5, "c": 5.0, "d": 5.0,
                "a0": 1.0, "b0": 1.0, "iters": 300, "burn_in": 200, "samples": 1, "inner_sweeps": 2,
                "step_exponent": 0.5, "pi_threshold": 0.05, "randomize_order": False,
                "checkpoint_every": 0, "fft_size": 1024, "target_max": 1000, "kernel": None, "threads": None}


def load_counts(path, fft_size: int, target_max: int):
    """Counts from a data checkpoint or a WAV file; returns ``(X, meta)``."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    if path.suffix.lower() == ".wav":
        signal, rate = audio.read_wav(path)
        cfg = audio.StftConfig(fft_size=fft_size, sample_rate=rate)
        counts, spec = audio.quantize(audio.stft(signal, cfg), target_max)
        return counts, {"stft": cfg.to_dict(), "scale": spec.scale, "target_max": target_max,
                        "source": path.name}
    ck = checkpoint.load(path)
    checkpoint.require(ck, "data", ("X",))
    return as_counts(ck.arrays["X"]), {"source": path.name}


def _write_trace(path: Path, report: FitReport):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(FitReport.TRACE_COLUMNS)
        for it, eta, ll, active, wall in report.trace:
            w.writerow([it, repr(float(eta)), repr(float(ll)), active, f"{wall:.6f}"])


def cmd_fit(args, argv):
    cfg = _merge(args, FIT_DEFAULTS)
    if cfg["algorithm"] not in ("ssmf", "gibbs"):
        raise ValidationError("invalid-algorithm", f"unknown algorithm {cfg['algorithm']!r}")
    cfg["seed"] = _seed(cfg["seed"])
    threads = int(cfg["threads"] or default_threads())
    h = Hyperparams(a=cfg["a"], b=cfg["b"], c=cfg["c"], d=cfg["d"], a0=cfg["a0"], b0=cfg["b0"], K=int(cfg["K"]))
    X, data_meta = load_counts(args.data, int(cfg["fft_size"]), int(cfg["target_max"]))
    out = _out_dir(args.out)
    # threads do not change results, so they stay out of the recorded config
    run = Run(argv, out, {k: v for k, v in cfg.items() if k != "threads"}, cfg["seed"])
    meta = dict(data_meta, algorithm=cfg["algorithm"], pi_threshold=cfg["pi_threshold"])
    common = dict(inner_sweeps=int(cfg["inner_sweeps"]), seed=cfg["seed"], pi_threshold=float(cfg["pi_threshold"]),
                  checkpoint_every=int(cfg["checkpoint_every"]), randomize_order=bool(cfg["randomize_order"]),
                  threads=threads, kernel=cfg["kernel"])

    if cfg["algorithm"] == "ssmf":
        sc = SsmfConfig(max_iters=int(cfg["iters"]), step_exponent=float(cfg["step_exponent"]), **common)

        def on_ck(i, q):
            checkpoint.save(run.add(out / f"checkpoint_{i:06d}.json"),
                            checkpoint.variational_checkpoint(q, h, i, sc.seed, meta=meta))

        q, report = run_ssmf(X, h, sc, on_checkpoint=on_ck)
        ck = checkpoint.variational_checkpoint(q, h, sc.max_iters, sc.seed, mask=report.mask, meta=meta)
    else:
        gc = GibbsConfig(burn_in=int(cfg["burn_in"]), post_burn_samples=int(cfg["samples"]), **common)

        def on_ck(i, g, s):
            checkpoint.save(run.add(out / f"checkpoint_{i:06d}.json"),
                            checkpoint.Checkpoint("gibbs", {"W": g.W, "H": g.H, "S": s, "pi": g.pi},
                                                  h, i, gc.seed, meta))

        samples, report = run_gibbs(X, h, gc, on_checkpoint=on_ck)
        last = samples[-1]
        ck = checkpoint.Checkpoint("gibbs", {"W": last.W, "H": last.H, "S": last.S, "pi": last.pi},
                                   h, last.iteration, gc.seed, meta)
    ck.meta["active_count"] = report.active_count
    checkpoint.save(run.add(out / "checkpoint.json"), ck)
    _write_trace(run.add(out / "trace.csv"), report)
    run.finish()
    print(f"{cfg['algorithm']}: {report.active_count} active components of {h.K}; wrote {out / 'checkpoint.json'}")


# ------------------------------------------------------------- separate

def cmd_separate(args, argv):
    ck = checkpoint.load(_existing(args.model))
    W, HS, pi = checkpoint.posterior_factors(ck)
    stft_meta = ck.meta.get("stft")
    if not stft_meta:
        raise FormatError("format-mismatch", "model was not fitted on audio (no STFT settings recorded)")
    cfg = audio.StftConfig(**stft_meta)
    mix, _ = audio.read_wav(_existing(args.mix), cfg.sample_rate)
    mix_spec = audio.stft(mix, cfg)
    if mix_spec.coeffs.shape != (W.shape[0], HS.shape[1]):
        raise ValidationError("dimension-mismatch",
                              f"mixture spectrogram {mix_spec.coeffs.shape} vs model {(W.shape[0], HS.shape[1])}")
    ref_paths = [_existing(p) for p in args.refs.split(",") if p]
    if not ref_paths:
        raise ValidationError("invalid-input", "--refs needs at least one file")
    envelopes = []
    for p in ref_paths:
        ref, _ = audio.read_wav(p, cfg.sample_rate)
        env = audio.stft(ref, cfg).power_envelope()
        if len(env) != mix_spec.n_frames:
            raise ValidationError("dimension-mismatch", f"{p}: {len(env)} frames vs mixture {mix_spec.n_frames}")
        envelopes.append(env)
    groups = audio.match_components(HS, envelopes)
    out = _out_dir(args.out)
    run = Run(argv, out, {"model": str(args.model), "mix": str(args.mix), "refs": [str(p) for p in ref_paths],
                          "groups": groups})
    for p, spec in zip(ref_paths, audio.wiener_separate(mix_spec, W, HS, groups)):
        audio.write_wav(run.add(out / Path(p).name), audio.istft(spec), cfg.sample_rate)
    run.finish()
    print("components per source: " + ", ".join(f"{Path(p).stem}={g[0]}" for p, g in zip(ref_paths, groups)))


# ----------------------------------------------------------------- eval

def _wavs(directory) -> dict:
    d = Path(_existing(directory))
    if not d.is_dir():
        raise ValidationError("invalid-input", f"{d} is not a directory")
    return {p.name: p for p in sorted(d.glob("*.wav"))}


def write_scores(path, result, names):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {NOTE}\n")
        w = csv.writer(fh)
        w.writerow(["source", "SDR", "SIR", "SAR"])
        for name, *vals in result.rows(names):
            w.writerow([name] + [f"{v:.6f}" for v in vals])


def read_scores(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return [dict(row, **{k: float(row[k]) for k in ("SDR", "SIR", "SAR")}) for row in csv.DictReader(lines)]


def cmd_eval(args, argv):
    est, refs = _wavs(args.est), _wavs(args.refs)
    names = sorted(set(refs))
    if not names:
        raise ValidationError("invalid-input", f"no WAV files in {args.refs}")
    missing = [n for n in names if n not in est]
    if missing:
        raise FormatError("format-mismatch", f"no estimate for references {missing}")
    E, R = [], []
    for n in names:
        e, rate = audio.read_wav(est[n], None)
        r, _ = audio.read_wav(refs[n], rate)
        m = min(len(e), len(r))
        E.append(e[:m])
        R.append(r[:m])
    m = min(len(x) for x in E + R)
    result = evaluate([e[:m] for e in E], [r[:m] for r in R])
    out_path = Path(args.out) if args.out else Path(args.est) / "scores.csv"
    out_dir = _out_dir(out_path.parent)
    run = Run(argv, out_dir, {"est": str(args.est), "refs": str(args.refs)})
    write_scores(run.add(out_path), result, [Path(n).stem for n in names])
    run.finish()
    sdr, sir, sar = result.mean()
    print(f"mean SDR {sdr:.2f} dB, SIR {sir:.2f} dB, SAR {sar:.2f} dB ({NOTE})", file=sys.stderr)


# ----------------------------------------------------------------- diag

def cmd_diag(args, argv):
    ck = checkpoint.load(_existing(args.model))
    W, HS, pi = checkpoint.posterior_factors(ck)
    tau = float(ck.meta.get("pi_threshold", 0.05))
    active = set(active_components(pi, tau).tolist())
    out = _out_dir(args.out)
    run = Run(argv, out, {"model": str(args.model)})
    with open(run.add(out / "pi.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["component", "pi", "active"])
        for k, p in enumerate(pi):
            w.writerow([k, repr(float(p)), int(k in active)])
    np.savetxt(run.add(out / "components.csv"), W, delimiter=",", fmt="%.17g",
               header=",".join(f"k{k}" for k in range(W.shape[1])), comments="")
    np.savetxt(run.add(out / "activations.csv"), HS, delimiter=",", fmt="%.17g",
               header=",".join(f"t{t}" for t in range(HS.shape[1])), comments="")
    run.finish()
    print(f"{len(active)} of {len(pi)} components above pi > {tau}")


def _existing(path) -> Path:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(str(p))
    return p


# --------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bpnmf", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=_version())
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset with ground truth")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--paper-scale", action="store_true", default=None, help="75 x 1000 counts, 100 components")
    for name in ("F", "T", "L"):
        p.add_argument(f"--{name}", type=int)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="fit the model by SSMF or Gibbs sampling")
    p.add_argument("--data", required=True, help="data checkpoint (.json) or mixture (.wav)")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--algorithm", help="ssmf (default) or gibbs")
    p.add_argument("--K", type=int)
    p.add_argument("--seed", type=int)
    for name in ("a", "b", "c", "d", "a0", "b0", "step-exponent", "pi-threshold"):
        p.add_argument(f"--{name}", type=float)
    for name in ("iters", "burn-in", "samples", "inner-sweeps", "checkpoint-every", "fft-size", "target-max"):
        p.add_argument(f"--{name}", type=int)
    p.add_argument("--randomize-order", action="store_true", default=None)
    p.add_argument("--kernel", choices=sorted(mask.KERNELS))
    p.add_argument("--threads", type=int, help="worker threads (default: $BPNMF_THREADS or all cores)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("separate", help="Wiener-filter a mixture into per-reference sources")
    p.add_argument("--mix", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--refs", required=True, help="comma-separated reference WAVs")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_separate)

    p = sub.add_parser("eval", help="SDR/SIR/SAR of estimates against references (matched by file name)")
    p.add_argument("--est", required=True)
    p.add_argument("--refs", required=True)
    p.add_argument("--out", help="score CSV path (default: <est>/scores.csv)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("diag", help="write pi, component and activation CSVs from a checkpoint")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_diag)
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args, ["bpnmf"] + argv)
    except FileNotFoundError as exc:
        print(f"bpnmf: error: code=file-not-found: {exc.filename or exc}", file=sys.stderr)
        return 1
    except BpnmfError as exc:
        print(f"bpnmf: error: code={exc.code}: {exc.message}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
