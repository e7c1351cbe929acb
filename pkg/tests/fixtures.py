"""Three fixed 10-record metric fixtures with hand-computed answers.

Every latency and ratio is dyadic, so the expected values below are exact
binary floats and can be compared with ``==``.
"""

from slaflow.metrics import RequestRecord, UtilizationSample
from slaflow.workload import E2E, TTFT


def _ttft(i, arrival, latency, sla):
    return RequestRecord(i, "code_completion", arrival, arrival + latency, arrival + latency + 1.0, sla, TTFT)


def _e2e(i, arrival, latency, sla):
    return RequestRecord(i, "code_translation", arrival, arrival + 0.25, arrival + latency, sla, E2E)


def _samples(rows):
    return [UtilizationSample(2.0 * k, busy, prov) for k, (busy, prov) in enumerate(rows)]


# A: TTFT latencies 0.5, 1.0, ..., 5.0 against an SLA of 2.5
FIXTURE_A = {
    "records": [_ttft(i, 0.25 * i, 0.5 * (i + 1), 2.5) for i in range(10)],
    "samples": _samples([(b, 12) for b in (0, 3, 6, 9, 12, 12, 9, 6, 3, 0)]),
    # met: 0.5..2.5 -> 5 of 10
    "goodput": 0.5,
    # sorted latencies are the list itself; rank = ceil(p/100 * 10)
    "p50": 2.5, "p95": 5.0, "p99": 5.0, "p10": 0.5,
    "mean": 2.75,        # 27.5 / 10
    "utilization": 0.5,  # ratios sum to 60/12 = 5
}

# B: E2E latencies 3 1 4 1 5 9 2 6 5 3 against an SLA of 4
_B = (3, 1, 4, 1, 5, 9, 2, 6, 5, 3)
FIXTURE_B = {
    "records": [_e2e(i, 10.0 + i, float(lat), 4.0) for i, lat in enumerate(_B)],
    "samples": _samples([(1, 4), (2, 4), (2, 8), (4, 8), (1, 2), (2, 2), (0, 1), (1, 1), (0, 0), (3, 4)]),
    # met: 3 1 4 1 2 3 -> 6 of 10
    "goodput": 0.6,
    # sorted: 1 1 2 3 3 4 5 5 6 9
    "p50": 3.0, "p95": 9.0, "p99": 9.0, "p10": 1.0, "p90": 6.0,
    "mean": 3.9,           # 39 / 10
    "utilization": 0.475,  # .25 .5 .25 .5 .5 1 0 1 0(empty) .75 -> 4.75
}

# C: mixed criteria, with latencies sitting exactly on the SLA
_C_TTFT = (1.0, 0.75, 1.25, 0.5, 1.0)
_C_E2E = (8.0, 7.5, 8.5, 2.0, 16.0)
FIXTURE_C = {
    "records": ([_ttft(i, 100.0 + i, lat, 1.0) for i, lat in enumerate(_C_TTFT)]
                + [_e2e(5 + i, 200.0 + i, lat, 8.0) for i, lat in enumerate(_C_E2E)]),
    "samples": _samples([(8, 8)] * 9 + [(1, 8)]),
    # met: TTFT 1.0 .75 .5 1.0 (4), E2E 8.0 7.5 2.0 (3) -> 7 of 10
    "goodput": 0.7,
    # sorted: .5 .75 1 1 1.25 2 7.5 8 8.5 16
    "p50": 1.25, "p95": 16.0, "p99": 16.0, "p10": 0.5, "p90": 8.5,
    "mean": 4.65,            # 46.5 / 10
    "utilization": 0.9125,   # 9 + 1/8 over 10
}

FIXTURES = {"A": FIXTURE_A, "B": FIXTURE_B, "C": FIXTURE_C}
