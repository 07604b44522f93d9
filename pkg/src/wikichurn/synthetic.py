"""Deterministic synthetic data for tests, demos and the acceptance suite.

* :func:`signal_matrix` draws a labeled matrix over the 16 non-linguistic
  columns with three discriminative ones.
* :func:`pipeline_bundle` writes a small fixture where only the admin score and
  revert counts separate missing from active editors, plus a monitoring pool
  with planted at-risk editors.
* :func:`paper_scale_bundle` encodes a large cohort whose curation stage counts
  and comparability p-value are fixed in advance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, datetime, timezone

import numpy as np

from .features.activity import ActivityFeatures
from .ingest.fixture import FixtureBundle
from .ingest.types import EditEvent, MissingEntry, PageRef
from .stats import describe, mann_whitney_u

DAY = 86400
NON_LINGUISTIC_NAMES = [f"g1.{n}" for n in ActivityFeatures.names()] + ["g4.admin_score", "g5.revert_rate"]
SIGNAL_NAMES = ("g5.revert_rate", "g4.admin_score", "g1.f1_ns0")


def _ts(year: int, month: int = 1, day: int = 1) -> int:
    return int(datetime(year, month, day, tzinfo=timezone.utc).timestamp())


def signal_matrix(
    n: int = 1000,
    seed: int = 0,
    separation: float = 1.5,
    signals: tuple[str, ...] = SIGNAL_NAMES,
    constant: tuple[str, ...] = (),
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Balanced labeled matrix over the 16 non-linguistic columns.

    Noise columns are standard normal. Each signal column has unit marginal
    variance with class means ``separation`` apart, so the within-class
    spread is ``sqrt(1 - (separation / 2) ** 2)``. Columns in ``constant``
    hold a single value.
    """
    if not 0 < separation < 2:
        raise ValueError("separation must lie in (0, 2) marginal standard deviations")
    names = list(NON_LINGUISTIC_NAMES)
    rng = np.random.default_rng(seed)
    y = rng.permutation(np.arange(n) % 2)
    X = rng.standard_normal((n, len(names)))
    within = math.sqrt(1.0 - (separation / 2.0) ** 2)
    for name in signals:
        j = names.index(name)
        X[:, j] = within * X[:, j] + separation * (y - 0.5)
    for name in constant:
        X[:, names.index(name)] = 0.5
    return X, y, names


# ---------------------------------------------------------------- pipeline fixture

_SENTENCES = (
    "I edit articles about history and geography.",
    "This user is a member of the copy editing project.",
    "Please leave me a message on my talk page.",
    "I mostly fix typos and improve references.",
    "My interests include music, films and old maps.",
    "I have been editing here for many years.",
    "Feel free to ask me about sources.",
    "I enjoy reviewing new articles and helping newcomers.",
    "Thanks for visiting my page.",
    "I like to write about small towns and railways.",
    "Sometimes I take photographs for articles.",
    "I try to keep a neutral point of view.",
)
_MARKUP = (
    "{{User en}} ",
    "<div style=\"float:right\">[[File:Example.jpg|thumb]]</div> ",
    "See [[Wikipedia:Five pillars|the pillars]]. ",
    "",
)


def _edits(rng: np.random.Generator, editor: str, last: int, n: int = 60) -> list[dict]:
    """Class-independent edit history ending at ``last``."""
    gaps = rng.exponential(1.5 * DAY, size=n).astype(int) + 60
    stamps = last - np.concatenate([[0], np.cumsum(gaps[:-1])])
    namespaces = rng.choice([0, 1, 4, 5], size=n, p=[0.55, 0.15, 0.2, 0.1])
    out = []
    for i in range(n):
        ns = int(namespaces[i])
        minor = bool(rng.random() < 0.3)
        delta = int(rng.normal(0, 40 if minor else 400))
        ev = EditEvent(
            editor=editor,
            page=PageRef(f"Page {int(rng.integers(0, 40)):02d}", ns),
            timestamp=int(stamps[i]),
            byte_delta=delta,
            minor=minor,
            ores_damaging_prob=round(float(rng.beta(1, 12)), 4),
            ores_goodfaith_prob=round(float(rng.beta(12, 1)), 4),
            reverted=bool(rng.random() < 0.05),
            automated=bool(i % 10 == 7),
        )
        out.append(ev.to_dict())
    return out


def _profile(rng: np.random.Generator) -> str | None:
    if rng.random() < 0.1:
        return None
    k = int(rng.integers(2, 6))
    picks = rng.choice(len(_SENTENCES), size=k, replace=False)
    markup = _MARKUP[int(rng.integers(0, len(_MARKUP)))]
    return markup + " ".join(_SENTENCES[i] for i in picks)


@dataclass(frozen=True)
class _Profile:
    admin: tuple[float, float]
    revert: tuple[float, float]


_MISSING = _Profile(admin=(600.0, 40.0), revert=(6.0, 1.0))
_ACTIVE = _Profile(admin=(900.0, 40.0), revert=(1.0, 0.5))


def _payload(
    rng: np.random.Generator,
    name: str,
    profile: _Profile,
    rate: float,
    last: int,
    top_titles: list[str],
    span_days: int = 2000,
) -> dict:
    total = max(60, int(round(rate * span_days)))
    years: dict[str, int] = {}
    last_year = datetime.fromtimestamp(last, tz=timezone.utc).year
    years[str(last_year)] = total // 2
    years[str(last_year - 1)] = total - total // 2
    admin = round(float(rng.normal(*profile.admin)), 2)
    counts = {t: int(rng.integers(5, 40)) for t in top_titles}
    reverts = {t: max(0, int(round(rng.normal(*profile.revert)))) for t in top_titles}
    return {
        "id": name,
        "total_edits": total,
        "first_edit": last - span_days * DAY,
        "last_edit": last,
        "edits_by_year": years,
        "edits": _edits(rng, name, last),
        "top_pages": {"0": counts},
        "reverts": reverts,
        "admin_score": admin,
        "user_page": _profile(rng),
    }


def pipeline_bundle(
    seed: int = 7,
    n_missing: int = 60,
    n_candidates: int = 100,
    n_fast: int = 12,
    n_edited_in_cutoff: int = 4,
    n_planted: int = 8,
    n_steady: int = 12,
) -> tuple[FixtureBundle, list[str]]:
    """Small end-to-end fixture; returns the bundle and the planted pool editors.

    Activity, text and namespaces are drawn identically for both classes, so
    only the admin score (G4) and revert counts (G5) carry signal. Every
    missing editor has one hub article co-edited by three candidates; ``n_fast``
    candidates edit too quickly to survive rate matching.
    """
    rng = np.random.default_rng(seed)
    bundle = FixtureBundle(snapshot_at=_ts(2022))
    hubs = [f"Hub {i:03d}" for i in range(n_missing)]
    cand = [f"Cand{i:03d}" for i in range(n_candidates)]
    cand_hubs: dict[str, list[str]] = {c: [] for c in cand}

    for i, hub in enumerate(hubs):
        miss = f"Gone{i:03d}"
        revs = [(miss, _ts(2019, 3, 1) + k * DAY) for k in range(3)]
        for j in range(3):
            c = cand[(3 * i + j) % n_candidates]
            cand_hubs[c].append(hub)
            revs += [(c, _ts(2021, 1, 1) + (i * 10 + j * 2 + k) * 3600) for k in range(2)]
        bundle.pages[PageRef(hub, 0)] = revs

    for i, hub in enumerate(hubs):
        name = f"Gone{i:03d}"
        rate = float(rng.uniform(2.0, 6.0))
        last = _ts(2019, 6, 1) + int(rng.integers(0, 150)) * DAY
        bundle.editors[name] = _payload(rng, name, _MISSING, rate, last, [hub])
        bundle.missing_list.append(MissingEntry(name, datetime.fromtimestamp(last, tz=timezone.utc).date()))
    for i in range(n_edited_in_cutoff):
        name = f"Back{i:03d}"
        last = _ts(2020, 5, 1)
        bundle.editors[name] = _payload(rng, name, _MISSING, 3.0, last, [hubs[i % n_missing]])
        bundle.missing_list.append(MissingEntry(name, date(2019, 12, 1)))

    for k, name in enumerate(cand):
        fast = k >= n_candidates - n_fast
        rate = float(rng.uniform(11.0, 14.0)) if fast else float(rng.uniform(3.2, 4.8))
        last = _ts(2021, 6, 1) + int(rng.integers(0, 150)) * DAY
        bundle.editors[name] = _payload(rng, name, _ACTIVE, rate, last, cand_hubs[name] or [hubs[0]])

    pool = [f"Pool{i:03d}" for i in range(n_planted + n_steady)]
    order = rng.permutation(len(pool))
    planted = sorted(pool[i] for i in order[:n_planted])
    for name in pool:
        risky = name in planted
        # planted editors sit well inside the missing profile, steady ones inside the active one
        prof = _Profile(admin=(560.0, 10.0), revert=(7.0, 0.3)) if risky else _Profile(admin=(940.0, 10.0), revert=(0.5, 0.3))
        last = _ts(2021, 9, 1)
        bundle.editors[name] = _payload(rng, name, prof, 4.0, last, [hubs[int(rng.integers(0, n_missing))]])
    bundle.pool = pool
    bundle.validate()
    return bundle, planted


# ---------------------------------------------------------------- paper-scale replay

@dataclass(frozen=True)
class PaperScale:
    listed: int = 1226
    filtered: int = 1146
    candidates: int = 5213
    matched: int = 2569
    target_p: float = 0.14
    pages_per_ns: int = 20
    top_k: int = 10
    days: int = 4000


def _quantiles(n: int) -> np.ndarray:
    from statistics import NormalDist

    nd = NormalDist()
    return np.asarray([nd.inv_cdf((i + 0.5) / n) for i in range(n)])


def _matched_totals(m: float, sigma: float, n: int, days: int, shift: int) -> np.ndarray:
    u = (2.0 * (np.arange(n) + 0.5) / n) - 1.0
    base = np.round((m + 0.9 * sigma * u) * days).astype(np.int64)
    return base + shift


def paper_scale_bundle(scale: PaperScale = PaperScale(), seed: int = 1146) -> FixtureBundle:
    """Fixture whose curation replays fixed stage counts and comparability.

    Each filtered editor owns one hub article holding two revisions from each
    of ten candidates (candidate ``(10*i + j) mod C``), and shares 59 filler
    pages whose contributors appear once each, so the ten hub co-editors are
    exactly the top ten. All lifetimes span ``days`` days, so a rate is the
    total edit count divided by ``days``. Matched candidates are spread across
    the one-sigma window and shifted as a block until the two-sided
    Mann-Whitney p-value is the closest achievable to ``target_p``.
    """
    s = scale
    rng = np.random.default_rng(seed)
    bundle = FixtureBundle(snapshot_at=_ts(2021, 1, 15))
    last_missing = _ts(2019, 6, 30)
    last_active = _ts(2020, 12, 31)

    # missing rates: normal quantiles around 4 edits/day
    miss_totals = np.maximum(np.round((4.0 + 2.0 * _quantiles(s.filtered)) * s.days), 400).astype(np.int64)
    miss_rates = miss_totals / s.days
    st = describe(list(miss_rates))
    m, sigma = st.mean, st.std

    best_shift, best_gap = 0, math.inf
    lo, hi = -int(0.09 * sigma * s.days), int(0.09 * sigma * s.days)
    # p is unimodal in the shift; scan coarsely then refine around the target crossing
    for step in (max(1, (hi - lo) // 200), 1):
        grid = range(lo, hi + 1, step)
        for shift in grid:
            rates = _matched_totals(m, sigma, s.matched, s.days, shift) / s.days
            p = mann_whitney_u(list(miss_rates), list(rates)).p_value
            gap = abs(p - s.target_p)
            if gap < best_gap or (gap == best_gap and abs(shift) < abs(best_shift)):
                best_shift, best_gap = shift, gap
        lo, hi = best_shift - step, best_shift + step
    matched_totals = _matched_totals(m, sigma, s.matched, s.days, best_shift)

    n_out = s.candidates - s.matched
    above = np.round((m + sigma + 0.5 + 0.001 * np.arange(n_out - n_out // 2)) * s.days)
    below_hi = max(0.05, m - sigma - 0.5)
    below = np.round(np.linspace(0.05, below_hi, n_out // 2) * s.days)
    cand_totals = np.concatenate([matched_totals, above, below]).astype(np.int64)
    perm = rng.permutation(s.candidates)
    names = [f"Editor{k:05d}" for k in range(s.candidates)]

    def lifetime(name: str, total: int, last: int, in_cutoff: bool, admin: tuple[float, float]) -> dict:
        year = datetime.fromtimestamp(last, tz=timezone.utc).year
        by_year = {str(year): int(total)} if not in_cutoff else {"2019": int(total) - 5, "2020": 5}
        return {
            "id": name,
            "total_edits": int(total),
            "first_edit": last - s.days * DAY,
            "last_edit": last,
            "edits_by_year": by_year,
            "edits": [],
            "top_pages": {},
            "reverts": {},
            "admin_score": round(float(rng.normal(*admin)), 2),
            "user_page": None,
        }

    missing_admin = (734.38, 165.38)
    active_admin = (823.86, 174.93)
    for idx, name in enumerate(names):
        bundle.editors[name] = lifetime(name, int(cand_totals[perm[idx]]), last_active, False, active_admin)

    fillers = (
        [PageRef(f"Shared article {k:02d}", 0) for k in range(s.pages_per_ns - 1)]
        + [PageRef(f"Shared project {k:02d}", 4) for k in range(s.pages_per_ns)]
        + [PageRef(f"Shared talk {k:02d}", 1) for k in range(s.pages_per_ns)]
    )
    for f, page in enumerate(fillers):
        bundle.pages[page] = [(f"Filler{2 * f + r:03d}", last_active - (2 * f + r) * 3600) for r in range(2)]

    for i in range(s.filtered):
        name = f"Retired{i:04d}"
        hub = PageRef(f"Hub article {i:04d}", 0)
        revs = [(name, last_missing - k * DAY) for k in range(3)]
        for j in range(s.top_k):
            c = names[(s.top_k * i + j) % s.candidates]
            revs += [(c, last_active - (j * 2 + r) * 60) for r in range(2)]
        bundle.pages[hub] = revs
        payload = lifetime(name, int(miss_totals[i]), last_missing, False, missing_admin)
        payload["top_pages"] = {
            "0": {hub.title: 100, **{p.title: 1 for p in fillers if p.namespace == 0}},
            "4": {p.title: 1 for p in fillers if p.namespace == 4},
            "1": {p.title: 1 for p in fillers if p.namespace == 1},
        }
        bundle.editors[name] = payload
        bundle.missing_list.append(MissingEntry(name, date(2019, 6, 30)))
    for i in range(s.listed - s.filtered):
        name = f"Returned{i:03d}"
        bundle.editors[name] = lifetime(name, 4000, _ts(2020, 8, 1), True, missing_admin)
        bundle.missing_list.append(MissingEntry(name, date(2019, 3, 1)))
    bundle.validate()
    return bundle
