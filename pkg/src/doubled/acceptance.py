"""Exit criteria for the package, runnable from pytest or ``ddo selftest``.

Each ``criterion_*`` function returns a :class:`CriterionResult`; the
tolerances and runtime limits are fixed here.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Iterator

import numpy as np

from .born import born_distribution, qm_oracle
from .ddo import (
    apply_jamiolkowski,
    assemble,
    closed_form_ddo,
    detect_temporality,
    gen_jamiolkowski,
    reduce_left,
    reduce_right,
    to_superdensity,
)
from .inequalities import (
    BehaviorTable,
    STTestConfig,
    causal_value,
    random_ordered_behavior,
    signaling_check,
    st_test_value,
)
from .numerics import hermiticity_residual, min_eigenvalue_hermitian
from .pauli import build_basis
from .process_dsl import ParseError, ProcessModel, parse, serialize
from .qobjects import BUILTIN_CHANNELS, BlochObservable, DensityOperator, Instrument, builtin_channel
from .sampling import (
    make_rng,
    random_bloch_observable,
    random_channel,
    random_density,
    random_instrument,
    random_model,
    random_unital_channel,
)
from .tensors import CorrelationTensor, dct_spacetime, dct_spatial, dct_temporal, verify_axioms


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d}. {self.name} ({self.seconds:.2f}s): {self.detail}"


def _timed(number: int, name: str, limit: float | None, fn: Callable[[], tuple]) -> CriterionResult:
    t0 = time.perf_counter()
    ok, detail = fn()
    dt = time.perf_counter() - t0
    if limit is not None:
        detail += f"; runtime {dt:.2f}s (limit {limit:g}s)"
        ok = ok and dt < limit
    return CriterionResult(number, name, bool(ok), detail, dt)


# ----------------------------------------------------------------- samples

AXIOM_CASES = {
    "spatial": [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (3, 3)],
    "temporal": [(2, 2), (2, 3), (3, 2), (3, 3)],
    "mixed": [(2, 2), (2, 3), (3, 2), (3, 3)],
}


def axiom_instances(seed: int = 0, per_layout: int = 100) -> Iterator[tuple[str, int, int, CorrelationTensor]]:
    """The tensors behind criteria 3 and 7: ``per_layout`` random processes per layout."""
    rng = make_rng(seed)
    for layout, cases in AXIOM_CASES.items():
        for i in range(per_layout):
            d, n = cases[i % len(cases)]
            model = random_model(rng, d, layout, n)
            yield layout, d, n, dct_spacetime(model, build_basis(d))


def _random_instruments(model: ProcessModel, rng: np.random.Generator) -> list[Instrument]:
    out = []
    for _ in range(model.n_events):
        r = rng.random()
        if r < 0.1:
            out.append(Instrument.trivial(model.local_dim))
        elif r < 0.3:
            out.append(Instrument.projective(model.local_dim))
        else:
            out.append(random_instrument(model.local_dim, rng, outcomes=int(rng.integers(2, 4))))
    return out


# --------------------------------------------------------------- criteria

def criterion_1(seed: int = 0) -> CriterionResult:
    def run():
        worst = {"gram": 0.0, "herm": 0.0, "trace": 0.0}
        for d in (2, 3, 4, 5):
            b = build_basis(d)
            worst["gram"] = max(worst["gram"], b.gram_residual())
            worst["herm"] = max(worst["herm"], b.hermiticity_residual())
            worst["trace"] = max(worst["trace"], b.traceless_residual())
        ok = all(v < 1e-12 for v in worst.values())
        return ok, "max residuals " + ", ".join(f"{k}={v:.2e}" for k, v in worst.items())

    return _timed(1, "basis correctness d=2..5", 1.0, run)


def single_qubit_table(c) -> np.ndarray:
    """The 4x4 correlation matrix of ``rho = sum_mu c_mu s_mu / 2``, written out by hand."""
    c0, c1, c2, c3 = c
    return np.array([
        [c0, c1, c2, c3],
        [c1, c0, -1j * c3, 1j * c2],
        [c2, 1j * c3, c0, -1j * c1],
        [c3, -1j * c2, 1j * c1, c0],
    ])


def criterion_2(seed: int = 0) -> CriterionResult:
    def run():
        rng = make_rng(seed + 2)
        b = build_basis(2)
        worst = 0.0
        for _ in range(100):
            v = rng.standard_normal(3)
            v *= rng.random() ** (1 / 3) / np.linalg.norm(v)
            rho = DensityOperator.from_bloch(v)
            t = dct_spatial(rho, b, 1).matrix()
            worst = max(worst, float(np.max(np.abs(t - single_qubit_table([1.0, *v])))))
        return worst < 1e-12, f"100 Bloch vectors, max entry error {worst:.2e}"

    return _timed(2, "single-qubit tensor table", 1.0, run)


def criterion_3(seed: int = 0) -> CriterionResult:
    def run():
        herm, lam, norm, count = 0.0, np.inf, 0.0, 0
        for _, _, _, t in axiom_instances(seed):
            rep = verify_axioms(t)
            herm = max(herm, rep.hermiticity_residual)
            lam = min(lam, rep.min_eigenvalue)
            norm = max(norm, rep.normalization_residual)
            count += 1
        ok = herm < 1e-9 and lam >= -1e-9 and norm < 1e-10
        return ok, (f"{count} tensors: hermiticity {herm:.2e}, min eigenvalue {lam:.2e}, "
                    f"normalization {norm:.2e}")

    return _timed(3, "tensor axioms on spatial/temporal/mixed processes", 120.0, run)


def _spatial_ddos(seed: int):
    rng = make_rng(seed + 4)
    for i in range(30):
        d, n = AXIOM_CASES["spatial"][i % 6]
        rho = random_density(d**n, rng, rank=int(rng.integers(1, d**n + 1)))
        b = build_basis(d)
        yield rho, assemble(dct_spatial(rho, b, n), b)


def criterion_4(seed: int = 0) -> CriterionResult:
    def run():
        tr, red = 0.0, 0.0
        for rho, w in _spatial_ddos(seed):
            tr = max(tr, abs(w.trace - 1))
            red = max(red, float(np.max(np.abs(reduce_left(w) - rho.mat))),
                      float(np.max(np.abs(reduce_right(w) - rho.mat))))
        return tr < 1e-10 and red < 1e-10, f"30 spatial DDOs: |Tr W - 1| {tr:.2e}, reduction error {red:.2e}"

    return _timed(4, "spatial state recovery", None, run)


def criterion_5(seed: int = 0) -> CriterionResult:
    def run():
        rng = make_rng(seed + 5)
        b = build_basis(2)
        ident = builtin_channel("identity")
        z = b.ops[3]
        err, flagged = 0.0, 0
        for _ in range(20):
            rho = random_density(2, rng)
            ez = np.trace(rho.mat @ z)
            t = dct_temporal(rho, [ident], b)
            err = max(err, abs(t[0, 0, 1, 2] - 1j * ez))
            flagged += detect_temporality(assemble(t, b)).verdict == "temporal_signature"
        spatial_ok = sum(detect_temporality(w).verdict == "inconclusive" for _, w in _spatial_ddos(seed))
        ok = err < 1e-10 and flagged == 20 and spatial_ok == 30
        return ok, (f"T^(0,0;1,2) error {err:.2e}; temporal flagged {flagged}/20; "
                    f"spatial inconclusive {spatial_ok}/30")

    return _timed(5, "temporality witness", None, run)


def criterion_6(seed: int = 0) -> CriterionResult:
    def run():
        rng = make_rng(seed + 6)
        layouts = [("spatial", n) for n in (1, 2, 3)] + [("temporal", n) for n in (2, 3)] + \
                  [("mixed", n) for n in (2, 3)]
        dev, mass = 0.0, 0.0
        for i in range(200):
            layout, n = layouts[i % len(layouts)]
            d = 2 if (i // len(layouts)) % 2 == 0 else 3
            model = random_model(rng, d, layout, n)
            inst = _random_instruments(model, rng)
            got = born_distribution(model, inst, build_basis(d))
            ref = qm_oracle(model, inst)
            dev = max(dev, got.max_deviation(ref))
            mass = max(mass, abs(got.total() - 1))
        return dev < 1e-9 and mass < 1e-9, f"200 pairs: max deviation {dev:.2e}, normalization {mass:.2e}"

    return _timed(6, "unified Born rule vs forward simulation", 180.0, run)


def criterion_7(seed: int = 0) -> CriterionResult:
    def run():
        lam, tr, count = np.inf, 0.0, 0
        for _, d, _, t in axiom_instances(seed):
            b = build_basis(d)
            s = to_superdensity(assemble(t, b), b)
            lam = min(lam, min_eigenvalue_hermitian(s))
            tr = max(tr, abs(np.trace(s) - 1), hermiticity_residual(s))
            count += 1
        return lam >= -1e-9 and tr < 1e-9, f"{count} tensors: min eigenvalue {lam:.2e}, trace/hermiticity {tr:.2e}"

    return _timed(7, "superdensity positivity", None, run)


def _builtins_for(d: int):
    rng_params = {"bitflip": [0.3], "phaseflip": [0.6], "depolarizing": [0.7],
                  "amplitude_damping": [0.35], "rx": [0.4], "ry": [1.3], "rz": [2.1]}
    for name, (npar, _) in BUILTIN_CHANNELS.items():
        try:
            yield name, builtin_channel(name, rng_params.get(name, []), d)
        except Exception:
            continue  # qubit-only channel at d > 2


def criterion_8(seed: int = 0) -> CriterionResult:
    def run():
        rng = make_rng(seed + 8)
        dual = 0.0
        for d in (2, 3):
            b = build_basis(d)
            for _, ch in _builtins_for(d):
                j = gen_jamiolkowski(ch, b)
                for _ in range(10):
                    rho = random_density(ch.in_dim, rng)
                    dual = max(dual, float(np.max(np.abs(apply_jamiolkowski(j, rho.mat) - ch(rho.mat)))))
        b2 = build_basis(2)
        swap_form = 0.5 * sum(np.kron(s, s) for s in b2.ops)
        swap = builtin_channel("swap", [], 2).kraus[0]
        jid = gen_jamiolkowski(builtin_channel("identity"), b2)
        ident = max(float(np.max(np.abs(jid - swap_form))), float(np.max(np.abs(jid - swap))))
        closed = 0.0
        for d, steps in ((2, 2), (2, 3), (3, 2), (3, 3)):
            b = build_basis(d)
            for _ in range(3 if d == 2 else 1):
                rho = random_density(d, rng)
                chans = [random_unital_channel(d, rng) if k % 2 else random_channel(d, rng)
                         for k in range(steps - 1)]
                model = ProcessModel.build(d, 1, rho, [(0,)] * steps, chans)
                direct = assemble(dct_temporal(rho, chans, b), b).mat
                closed = max(closed, float(np.max(np.abs(closed_form_ddo(model, b).mat - direct))))
        ok = dual < 1e-10 and ident < 1e-12 and closed < 1e-10
        return ok, f"duality {dual:.2e}; identity channel {ident:.2e}; closed form {closed:.2e}"

    return _timed(8, "generalized Jamiolkowski duality and closed form", None, run)


def criterion_9(seed: int = 0) -> CriterionResult:
    def run():
        b = build_basis(2)
        z, mz = BlochObservable((0, 0, 1)), BlochObservable((0, 0, -1))
        best = st_test_value(STTestConfig(z, mz, z), b)
        rng = make_rng(seed + 9)
        agree = 0.0
        for _ in range(100):
            cfg = STTestConfig(*(random_bloch_observable(rng) for _ in range(3)))
            r = st_test_value(cfg, b)
            agree = max(agree, abs(r.simulated - r.analytic))
        h = math.sqrt(3) / 2
        trine = st_test_value(STTestConfig(BlochObservable((1, 0, 0)), BlochObservable((-0.5, h, 0)),
                                           BlochObservable((-0.5, -h, 0))), b)
        ok = (abs(best.simulated - 3) < 1e-9 and abs(best.analytic - 3) < 1e-9
              and agree < 1e-9 and best.simulated > 1.5)
        return ok, (f"maximal setting simulated {best.simulated:.12f}, analytic {best.analytic:.12f}; "
                    f"100 random triples agree to {agree:.2e}; "
                    f"simulated value at 120-degree coplanar setting {trine.simulated:.12f}")

    return _timed(9, "space-time correlation test", None, run)


def criterion_10(seed: int = 0) -> CriterionResult:
    def run():
        rng = make_rng(seed + 10)
        b = build_basis(2)
        g, l, sig = 0.0, 0.0, 0.0
        for i in range(200):
            order = "A<B" if i % 2 == 0 else "B<A"
            beh = random_ordered_behavior(rng, order, b)
            g = max(g, causal_value(beh, "gyni"))
            l = max(l, causal_value(beh, "lgyni"))
            sig = max(sig, signaling_check(beh, "B->A" if order == "A<B" else "A->B"))
        det = np.zeros((2, 2, 2, 2))
        for x in range(2):
            for y in range(2):
                det[x, y, y, x] = 1.0
        table = BehaviorTable(det)
        gmax, lmax = causal_value(table, "gyni"), causal_value(table, "lgyni")
        ok = g <= 0.5 + 1e-9 and l <= 0.75 + 1e-9 and sig <= 1e-9 and gmax == 1.0 and lmax == 1.0
        return ok, (f"200 ordered processes: max GYNI {g:.6f}, max LGYNI {l:.6f}, "
                    f"past-signaling {sig:.2e}; maximal table GYNI {gmax}, LGYNI {lmax}")

    return _timed(10, "causal inequality bounds", None, run)


def corpus_dir() -> Path:
    return Path(str(resources.files("doubled") / "corpus"))


def criterion_11(seed: int = 0) -> CriterionResult:
    def run():
        base = corpus_dir()
        files = sorted(base.glob("*.ddo"))
        stable = 0
        texts = []
        for f in files:
            data = f.read_bytes()
            texts.append(data)
            m = parse(data, base_dir=base)
            s = serialize(m)
            m2 = parse(s, base_dir=base)
            stable += (m2 == m and serialize(m2) == s)
        rng = make_rng(seed + 11)
        crashes, rejected, n_random = 0, 0, 5000
        for i in range(10_000):
            if i < n_random:
                blob = rng.bytes(int(rng.integers(0, 200)))
            else:
                blob = _mutate(texts[i % len(texts)], rng)
            try:
                parse(blob, base_dir=base)
            except ParseError as exc:
                rejected += i < n_random
                if exc.line < 1:
                    crashes += 1
            except Exception:
                crashes += 1
        ok = len(files) == 20 and stable == 20 and crashes == 0 and rejected == n_random
        return ok, (f"{stable}/{len(files)} corpus files round-trip; 10000 fuzz inputs, "
                    f"{crashes} crashes, {rejected}/{n_random} random blobs rejected")

    return _timed(11, "parser robustness", 60.0, run)


def _mutate(data: bytes, rng: np.random.Generator) -> bytes:
    buf = bytearray(data)
    for _ in range(int(rng.integers(1, 6))):
        op = rng.integers(0, 4)
        pos = int(rng.integers(0, len(buf) + 1))
        if op == 0 and buf:
            del buf[min(pos, len(buf) - 1)]
        elif op == 1:
            buf[pos:pos] = rng.bytes(int(rng.integers(1, 4)))
        elif op == 2 and buf:
            buf[min(pos, len(buf) - 1)] = int(rng.integers(0, 256))
        else:
            tok = [b"dim", b"step { }", b"channel", b"on 7", b"9", b"-1", b"}", b"\n", b"state dm x.json"]
            buf[pos:pos] = tok[int(rng.integers(0, len(tok)))]
    return bytes(buf)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11]


def run_all(seed: int = 0, echo: Callable[[str], None] | None = None) -> list[CriterionResult]:
    results = []
    for fn in CRITERIA:
        r = fn(seed)
        results.append(r)
        if echo is not None:
            echo(r.line())
    return results
