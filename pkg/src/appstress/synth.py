"""Synthetic cohort generator and a brute-force SVM verification oracle.

The generator plants a per-user, monotone dependence between daily stress
and app usage. Rules come in opposing pairs on shared feature channels
(more browser use under stress for one user, less for the next), so a
model pooled across users faces irreducible ambiguity while per-user
models see a clean signal. Everything is derived from the seed, so two
runs with the same spec produce identical cohorts.
"""

from __future__ import annotations

import bisect
import datetime as dt
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, PipelineError
from .ingest import AppEvent, EmaResponse, ScreenInterval
from .svm import KernelSpec, _as_xy, dual_objective_value, gram_matrix

HETEROGENEITY_MODES = ("homogeneous", "per_user_rules")

COHORT_START_DATE = dt.date(2013, 11, 4)

# Seconds after local midnight for the three daily prompts.
EMA_SLOTS = (10 * 3600, 15 * 3600, 20 * 3600)

# App vocabulary pool, grouped by the category the bundled taxonomy
# assigns. Users draw a vocabulary from this pool (at least one app per
# category so every usage channel exists).
APP_POOL: dict[str, tuple[str, ...]] = {
    "game": (
        "candycrushsaga", "fruitninja", "angrybirds", "solitaire", "sudoku",
        "chessmaster", "puzzlemania", "cardduel", "gamehub", "minigames",
        "sudokufree", "chessonline", "jigsawpuzzle", "cardmatch", "wordgames",
        "solitaireclassic", "angrybirdsrio", "fruitninjafree", "puzzlequest",
        "gamecenter", "chesstactics", "sudokuarena", "cardarena", "puzzleblocks",
    ),
    "social_networking": (
        "facebook", "twitter", "whatsapp", "viber", "skype", "gtalk",
        "pinterest", "flipboard", "dropbox", "localphone", "mobilevoip",
        "facebookmessenger", "twitterlite", "whatsappplus", "viberout",
        "skypelite", "gtalkpro", "pinterestlite", "flipboardreader",
        "dropboxsync", "voipdialer", "localphonepro", "whatsappbiz",
        "skypebusiness", "twitterdeck", "viberhd",
    ),
    "browser": (
        "chrome", "firefox", "email", "googlequicksearchbox", "chromebeta",
        "firefoxbeta", "mailbox", "emailclient", "fastmail", "websearch",
        "searchapp", "minibrowser", "dolphinbrowser", "operabrowser",
        "mailreader", "quicksearch", "browserx", "mailwidget",
    ),
    "entertainment": (
        "youtube", "fmradio", "tvguide", "musicplayer", "videoplayer",
        "streamplayer", "tvremote", "newsfeed", "audiobook", "mediaplayer",
        "radiotuner", "musicbox", "videostream", "tvplayer", "newsdigest",
        "bookreader", "podcastplayer", "youtubekids", "fmtuner", "moviestream",
        "livetv", "musicstream", "radioplus", "videoeditor", "ebookshelf",
        "newsbrief", "tvstream", "musicmixer",
    ),
    "utility": (
        "calendar", "clock", "calculator", "camera", "flashlight", "scanner",
        "navigator", "tripadvisor", "mapview", "weatherpro", "notepad",
        "voicememo", "qrreader", "voicerecorder", "recipebox", "shoplist",
        "accountmanager", "clockwidget", "calcpro", "scanmaster", "flashtorch",
        "calendarsync", "weathernow", "notekeeper", "navigpro", "cameraplus",
        "mapsoffline", "qrmaker", "voicenotes", "shopassist", "recipetimer",
        "accountledger",
    ),
}

# Baseline usage profile per category: uses/day center and seconds/use.
# Games are deliberately rare but long, the opposite corner from
# browsers. Durations off a user's stress-coupled channels are held at
# the center so the only daily-total structure is the planted one.
_BASE_FREQ = {"browser": 12, "utility": 10, "social_networking": 4, "entertainment": 2, "game": 1}
_BASE_DUR = {"browser": 60, "utility": 180, "social_networking": 120, "entertainment": 240, "game": 430}

# Each rule couples stress to one frequency channel and one duration
# channel: (freq category, uses/day per stress step, duration category,
# seconds/use per stress step). Rules 1 and 3 mirror 0 and 2 on the same
# channels, which is what starves the pooled model.
RULES: tuple[tuple[str, int, str, int], ...] = (
    ("browser", 5, "entertainment", -55),
    ("browser", -5, "entertainment", 55),
    ("utility", 5, "social_networking", -35),
    ("utility", -5, "social_networking", 35),
)

_CATEGORY_ORDER = ("browser", "utility", "social_networking", "entertainment", "game")


@dataclass(frozen=True)
class CohortSpec:
    n_users: int = 22
    n_days: int = 30
    seed: int = 42
    signal_strength: float = 0.9
    heterogeneity: str = "per_user_rules"
    ema_missing_rate: float = 0.05
    apps_per_user_mean: float = 12.0
    apps_per_user_sd: float = 6.45

    def __post_init__(self) -> None:
        if self.n_users < 1 or self.n_days < 1:
            raise ConfigError("synth", "n_users and n_days must be >= 1")
        if self.seed < 0:
            raise ConfigError("synth", "seed must be non-negative")
        if not 0.0 <= self.signal_strength <= 1.0:
            raise ConfigError("synth", "signal_strength must be in [0, 1]")
        if self.heterogeneity not in HETEROGENEITY_MODES:
            raise ConfigError(
                "synth", f"heterogeneity must be one of {HETEROGENEITY_MODES}, got {self.heterogeneity!r}"
            )
        if not 0.0 <= self.ema_missing_rate < 1.0:
            raise ConfigError("synth", "ema_missing_rate must be in [0, 1)")
        if self.apps_per_user_mean <= 0 or self.apps_per_user_sd < 0:
            raise ConfigError("synth", "apps_per_user mean must be positive and sd non-negative")


@dataclass(frozen=True)
class TruthRecord:
    user_id: str
    date: dt.date
    latent_stress: int
    rule_id: int


@dataclass
class Cohort:
    events: list[AppEvent]
    screens: list[ScreenInterval]
    emas: list[EmaResponse]
    truth: list[TruthRecord]


def _epoch(day: dt.date, seconds: int) -> int:
    midnight = dt.datetime.combine(day, dt.time(), tzinfo=dt.timezone.utc)
    return int(midnight.timestamp()) + seconds


def _draw_vocabulary(rng: np.random.Generator, spec: CohortSpec) -> dict[str, list[str]]:
    """One app per category guaranteed, then fill up to the drawn size."""
    size = int(round(rng.normal(spec.apps_per_user_mean, spec.apps_per_user_sd)))
    size = max(len(_CATEGORY_ORDER), min(size, sum(len(v) for v in APP_POOL.values())))
    vocab: dict[str, list[str]] = {}
    leftovers: list[tuple[str, str]] = []
    for cat in _CATEGORY_ORDER:
        pool = APP_POOL[cat]
        pick = int(rng.integers(0, len(pool)))
        vocab[cat] = [pool[pick]]
        leftovers.extend((cat, app) for k, app in enumerate(pool) if k != pick)
    extra = size - len(_CATEGORY_ORDER)
    if extra > 0:
        order = rng.permutation(len(leftovers))[:extra]
        for k in sorted(order):
            cat, app = leftovers[int(k)]
            vocab[cat].append(app)
    return vocab


# Standard-normal quintile edges: the stationary AR(1) below then spends
# about a fifth of its days at each stress level.
_STRESS_EDGES = (-0.8416212335729143, -0.2533471031357997, 0.2533471031357997, 0.8416212335729143)
_STRESS_RHO = 0.3


def _quantize_stress(z: float) -> int:
    return 1 + bisect.bisect(_STRESS_EDGES, z)


def _stress_walk(rng: np.random.Generator, n_days: int) -> list[int]:
    """Latent AR(1) (stationary N(0,1), day-to-day rho 0.3) cut into 5 levels.

    Persistence makes consecutive days correlate, as real stress does,
    while the stationary marginal keeps every level reachable in both
    halves of a chronological split.
    """
    z = rng.normal()
    out = [_quantize_stress(z)]
    scale = math.sqrt(1.0 - _STRESS_RHO * _STRESS_RHO)
    for _ in range(n_days - 1):
        z = _STRESS_RHO * z + scale * rng.normal()
        out.append(_quantize_stress(z))
    return out


def generate_cohort(spec: CohortSpec) -> Cohort:
    """Generate events, screen intervals, EMA responses, and planted truth.

    Per user and day, a latent stress level drives category usage through
    the user's rule. `signal_strength` is the probability that a day's
    usage follows the true stress rather than an independent uniform draw,
    so at 0 the features carry no label information at all. EMA responses
    report the latent stress exactly; only the configured missing rate
    thins them.
    """
    width = len(str(spec.n_users))
    events: list[AppEvent] = []
    screens: list[ScreenInterval] = []
    emas: list[EmaResponse] = []
    truth: list[TruthRecord] = []
    for u in range(spec.n_users):
        user_id = f"u{u + 1:0{width}d}"
        rule_id = (u % len(RULES)) if spec.heterogeneity == "per_user_rules" else 0
        freq_cat, freq_slope, dur_cat, dur_slope = RULES[rule_id]
        rng = np.random.default_rng([spec.seed, u])
        vocab = _draw_vocabulary(rng, spec)
        stress = _stress_walk(rng, spec.n_days)
        for d in range(spec.n_days):
            day = COHORT_START_DATE + dt.timedelta(days=d)
            level = stress[d]
            if rng.random() < spec.signal_strength:
                s_used = level
            else:
                s_used = int(rng.integers(1, 6))
            t = s_used - 3
            entries: list[tuple[str, int]] = []
            for cat in _CATEGORY_ORDER:
                if cat == freq_cat:
                    freq = _BASE_FREQ[cat] + freq_slope * t + int(rng.integers(-1, 2))
                else:
                    # Counts off the rule's channel stay fixed so the only
                    # count structure in a user's days is the planted one.
                    freq = _BASE_FREQ[cat]
                freq = max(0 if cat == "game" else 1, freq)
                dur = _BASE_DUR[cat]
                if cat == dur_cat:
                    dur = max(15, dur + dur_slope * t)
                for _ in range(freq):
                    app = vocab[cat][int(rng.integers(0, len(vocab[cat])))]
                    entries.append((app, dur))
            order = rng.permutation(len(entries))
            cursor = _epoch(day, 9 * 3600)
            first_start = cursor
            for k in order:
                app, dur = entries[int(k)]
                events.append(AppEvent(user_id=user_id, app_id=app, start=cursor, end=cursor + dur))
                cursor += dur + int(rng.integers(30, 181))
            screens.append(
                ScreenInterval(user_id=user_id, start=first_start - 60, end=cursor + 60)
            )
            for slot in EMA_SLOTS:
                if rng.random() >= spec.ema_missing_rate:
                    emas.append(EmaResponse(user_id=user_id, at=_epoch(day, slot), level=level))
            truth.append(TruthRecord(user_id=user_id, date=day, latent_stress=level, rule_id=rule_id))
    return Cohort(events=events, screens=screens, emas=emas, truth=truth)


def brute_force_svm_oracle(data, kernel: KernelSpec, c: float) -> tuple[float, np.ndarray]:
    """Exhaustive dual solve for tiny problems (n <= 6).

    Each multiplier is assigned a state in {0, C, interior}; for every
    pattern the interior multipliers come from the reduced linear KKT
    system plus the equality constraint, infeasible candidates are
    dropped, and the feasible candidate with the largest dual objective
    wins. Exact up to linear-solve roundoff, so it serves as ground truth
    for the iterative solver.
    """
    x, y = _as_xy(data)
    n = len(y)
    if n == 0:
        raise DataError("synth", "empty oracle problem")
    if n > 6:
        raise PipelineError("synth", f"oracle limited to 6 points, got {n}")
    if c <= 0:
        raise PipelineError("synth", "soft-margin constant c must be positive")
    if len(np.unique(y)) < 2:
        raise DataError("synth", "single-class training set")
    gram = gram_matrix(kernel, x)
    q = (y[:, None] * y[None, :]) * gram
    best_obj = -np.inf
    best_alpha = np.zeros(n)
    for pattern in itertools.product((0, 1, 2), repeat=n):
        state = np.asarray(pattern)
        free = np.flatnonzero(state == 2)
        bound = np.flatnonzero(state == 1)
        alpha = np.zeros(n)
        alpha[bound] = c
        nf = len(free)
        if nf > 0:
            a = np.zeros((nf + 1, nf + 1))
            rhs = np.zeros(nf + 1)
            a[:nf, :nf] = q[np.ix_(free, free)]
            a[:nf, nf] = y[free]
            a[nf, :nf] = y[free]
            rhs[:nf] = 1.0 - c * q[np.ix_(free, bound)].sum(axis=1)
            rhs[nf] = -c * y[bound].sum()
            try:
                sol = np.linalg.solve(a, rhs)
            except np.linalg.LinAlgError:
                sol, *_ = np.linalg.lstsq(a, rhs, rcond=None)
                if not np.allclose(a @ sol, rhs, atol=1e-8):
                    continue
            interior = sol[:nf]
            if interior.min(initial=0.0) < -1e-9 or interior.max(initial=0.0) > c + 1e-9:
                continue
            alpha[free] = np.clip(interior, 0.0, c)
        if abs(float(alpha @ y)) > 1e-8 * max(1.0, c):
            continue
        obj = dual_objective_value(alpha, y, gram)
        if obj > best_obj + 1e-12:
            best_obj = obj
            best_alpha = alpha
    return float(best_obj), best_alpha
