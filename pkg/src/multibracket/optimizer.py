"""Grid search over named parameter axes."""

from concurrent.futures import ThreadPoolExecutor
import csv
import io
from dataclasses import dataclass, field
from itertools import product
import logging
import math
import numbers

from . import rng
from .errors import DomainError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GridSpec:
    """Ordered named axes; points are visited lexicographically in axis order."""

    axes: tuple   # ((name, (v1, v2, ...)), ...)

    def __post_init__(self):
        axes = tuple((str(name), tuple(values)) for name, values in self.axes)
        names = [a[0] for a in axes]
        if len(set(names)) != len(names):
            raise DomainError(f"duplicate axis names in {names}")
        for name, values in axes:
            if not values:
                raise DomainError(f"axis {name!r} is empty")
        object.__setattr__(self, "axes", axes)

    @classmethod
    def of(cls, **axes):
        return cls(tuple(axes.items()))

    @property
    def names(self):
        return [a[0] for a in self.axes]

    @property
    def size(self):
        return math.prod(len(v) for _, v in self.axes)

    def points(self):
        for values in product(*(v for _, v in self.axes)):
            yield dict(zip(self.names, values))


@dataclass
class SurfacePoint:
    params: dict
    objective: float
    uncertainty: float = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.objective):
            raise DomainError(f"objective at {self.params} is not finite: {self.objective}")


class SweepError(RuntimeError):
    """An objective failed at a grid point."""

    def __init__(self, params, cause):
        super().__init__(f"objective failed at {params}: {cause}")
        self.params = params
        self.cause = cause


def point_seed(root, index):
    """Seed for the ``index``-th grid point, derived from the root seed."""
    return rng.stream_key(root, index) >> 1


def sweep(grid, objective, seed=0, common_random_numbers=False, workers=1):
    """Evaluate ``objective(params, seed)`` at every grid point.

    ``objective`` returns a float or a ``(value, stderr)`` pair.  Each point
    gets its own derived seed unless ``common_random_numbers`` is set, in
    which case all points share ``seed``.  With ``workers > 1`` points run on
    a thread pool; results keep grid order either way.
    """
    jobs = [(params, seed if common_random_numbers else point_seed(seed, i))
            for i, params in enumerate(grid.points())]

    def run(job):
        params, s = job
        try:
            value = objective(dict(params), s)
            value, err = value if isinstance(value, tuple) else (value, None)
            return SurfacePoint(params, float(value), None if err is None else float(err))
        except Exception as exc:   # re-raised with coordinates attached
            raise SweepError(params, exc) from exc

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(run, jobs))
    return [run(job) for job in jobs]


def argmax(points, check_noise=False):
    """Highest objective; the earliest point wins ties.

    With ``check_noise`` a warning is logged when the winner does not beat
    the runner-up by twice its combined standard error.
    """
    if not points:
        raise DomainError("argmax of an empty surface")
    best = 0
    for i, p in enumerate(points):
        if p.objective > points[best].objective:
            best = i
    if check_noise and len(points) > 1:
        rest = [p for i, p in enumerate(points) if i != best]
        second = max(rest, key=lambda p: p.objective)
        a, b = points[best].uncertainty or 0.0, second.uncertainty or 0.0
        margin = 2.0 * math.hypot(a, b)
        if points[best].objective - second.objective <= margin:
            log.warning("argmax %s beats runner-up %s by less than 2 stderr (%.4g <= %.4g)",
                        points[best].params, second.params,
                        points[best].objective - second.objective, margin)
    return points[best]


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(x)
    if isinstance(x, numbers.Integral):
        return str(int(x))
    if isinstance(x, numbers.Real):
        return repr(float(x))   # shortest round-trip form
    return str(x)


def surface_csv(points, axes=None, value_name="objective", error_name="stderr"):
    """CSV text: one column per axis, then the objective and (unless
    ``error_name`` is None) its stderr."""
    if axes is None:
        axes = list(points[0].params) if points else []
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    tail = [value_name] + ([error_name] if error_name else [])
    w.writerow(list(axes) + tail)
    for p in points:
        row = [_fmt(p.params[a]) for a in axes] + [_fmt(p.objective)]
        if error_name:
            row.append(_fmt(p.uncertainty))
        w.writerow(row)
    return buf.getvalue()


def read_surface_csv(text, value_name="objective", error_name="stderr"):
    """Inverse of :func:`surface_csv` for numeric surfaces."""
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    i_obj = header.index(value_name)
    i_se = header.index(error_name) if error_name in header else None
    axes = header[:i_obj]
    points = []
    for r in body:
        params = {a: float(v) for a, v in zip(axes, r)}
        err = float(r[i_se]) if i_se is not None and r[i_se] else None
        points.append(SurfacePoint(params, float(r[i_obj]), err))
    return points
