import datetime as dt

import numpy as np
import pytest

from ntlfresh.core import CustomerSeries


def monthly_dates(n, start=(2015, 1), day=10):
    y, m = start
    out = []
    for k in range(n):
        idx = y * 12 + m - 1 + k
        out.append(dt.date(idx // 12, idx % 12 + 1, day))
    return tuple(out)


def make_series(values, cid="A", label=0, start=(2015, 1)):
    values = tuple(float(v) for v in values)
    return CustomerSeries(cid, values, monthly_dates(len(values), start), label)


@pytest.fixture
def separable_2d():
    gen = np.random.default_rng(5)
    n = 80
    X = gen.normal(size=(n, 2))
    y = (X[:, 0] + 0.5 * X[:, 1] > 0).astype(np.int64)
    # widen the margin so the classes are cleanly separable
    X[y == 1] += np.array([1.0, 0.5])
    X[y == 0] -= np.array([1.0, 0.5])
    return X, y


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(";".join(header) + "\n")
        for r in rows:
            fh.write(";".join(str(v) for v in r) + "\n")
    return path


CONS_HEADER = ["customer_id", "reading_date", "kwh_measured", "kwh_billed"]
INSP_HEADER = ["customer_id", "inspection_date", "ntl_found"]


def random_fixture(gen, n_customers, n=14):
    """Consumption and inspection rows for a randomized population, plus the
    set of customers that must be rejected for a month gap and for being all
    zero. Every customer has exactly ``n`` in-window months unless gapped."""
    cons, insp, gapped, zeros = [], [], set(), set()
    for i in range(n_customers):
        cid = f"c{i:04d}"
        start = (2014 + int(gen.integers(0, 3)), 1 + int(gen.integers(0, 12)))
        dates = list(monthly_dates(n + 1, start, day=1 + int(gen.integers(0, 28))))
        kind = gen.random()
        if kind < 0.15:
            del dates[1 + int(gen.integers(0, n - 2))]  # gap inside the window
            gapped.add(cid)
        else:
            dates = dates[:n]
        is_zero = 0.15 <= kind < 0.25
        if is_zero:
            zeros.add(cid)
        for d in dates:
            v = 0.0 if is_zero else round(float(gen.uniform(0, 500)), 3)
            cons.append((cid, d.isoformat(), v, round(v)))
        last = dates[-1]
        insp.append((cid, (last + dt.timedelta(days=int(gen.integers(0, 10)))).isoformat(),
                     int(gen.random() < 0.3)))
    return cons, insp, gapped, zeros


# ---------------------------------------------------------------- acceptance verdicts

VERDICTS = []


def verdict(number, title, ok, detail=""):
    """Record one acceptance line and fail the calling test if ``ok`` is false."""
    VERDICTS.append((number, title, bool(ok), detail))
    assert ok, f"criterion {number} ({title}) failed: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(VERDICTS, key=lambda v: v[0]):
        terminalreporter.write_line(
            f"[{'PASS' if ok else 'FAIL'}] {number}. {title}" + (f"  ({detail})" if detail else ""))
