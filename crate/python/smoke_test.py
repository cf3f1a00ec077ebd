"""Smoke test for the tourneylab_py extension.

Build and install first:  cd crates/py && maturin develop --release
"""

import json
import math
from pathlib import Path

import tourneylab_py as tl

ROOT = Path(__file__).resolve().parent.parent


def main():
    m = tl.WinMatrix.skill(5.0, 32)
    assert m.n == 32
    assert math.isclose(m.p(1, 2) + m.p(2, 1), 1.0)

    ko = tl.FormatSpec("ko")
    swiss = tl.FormatSpec("swiss", rounds=5)
    assert (ko.counted_matches, swiss.counted_matches) == (80, 80)
    assert swiss.label == "swiss-5"

    one = tl.simulate(swiss, m, seed=1)
    assert sorted(one.ranking) == list(range(1, 33))
    assert one.counted_matches == 80

    # Upset-free play under standard seeding returns the true order.
    det = tl.simulate(tl.FormatSpec("ko", seeding="standard"), tl.WinMatrix.deterministic(32))
    assert det.ranking == list(range(1, 33))

    a = tl.run(swiss, m, reps=20000, seed=1)
    b = tl.run(ko, m, reps=20000, seed=2)
    p_less, p_tie = tl.dominance(a, b)
    print(f"P(swiss-5 < ko) = {p_less:.4f}  ties {p_tie:.4f}")
    assert abs(p_less - 0.904) < 0.03

    assert sum(c for _, c in b.histogram("inversions")) == 20000
    assert set(b.means) == {"inversions", "weighted_inversions", "avg_rank_top_1", "avg_rank_top_8"}
    assert json.loads(b.to_json())["replications"] == 20000

    assert tl.inversions([2, 1, 3]) == 1
    assert math.isclose(tl.weighted_inversions([2, 1, 3]), 1 / math.log(2))
    assert math.isclose(tl.weighted_inversions([2, 1, 3], log_base="2"), 1.0)
    assert tl.avg_rank_top([1, 2, 3], 2) == 1.0

    exact = tl.exact_expectation(tl.FormatSpec("ko", n=4), tl.WinMatrix.uniform(4))
    assert math.isclose(exact, 3.0)
    mc = tl.run(tl.FormatSpec("ko", n=4), tl.WinMatrix.uniform(4), reps=50000, topk=[1])
    assert abs(mc.mean("inversions") - exact) < 4 * mc.stderr("inversions")

    elo, names = tl.WinMatrix.elo(str(ROOT / "data" / "example_ratings.csv"))
    assert elo.n == len(names) == 32

    for bad in (lambda: tl.FormatSpec("ko", rounds=5), lambda: tl.WinMatrix.skill(-1, 8), lambda: tl.inversions([0, 1])):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")

    print("smoke test passed")


if __name__ == "__main__":
    main()
