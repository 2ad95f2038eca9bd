"""Projective and direct towers: compatibility, classes of points, limit brackets."""

from collections import Counter

from nambulab.towers import (canonical_projective, check_compat, check_limit_bracket, classify_tower_point,
                             example_towers, sample_tower_points, sumsq_direct)

for T, expected in example_towers():
    rep = check_compat(T)
    print(f"{T.name:34s} compat={rep.verdict} (expected {expected})")

T = canonical_projective(3, "x1")
tally = Counter(classify_tower_point(T, p).cls for p in sample_tower_points(T, 200, seed=0))
print("\nprojective tower, 200 points:", dict(tally))
gens = T.levels[0].generators()[:3]
rep = check_limit_bracket(T, gens, 0, sample_tower_points(T, 20, seed=1))
print("limit bracket independent of the level used:", rep.passed)

D = sumsq_direct(3)
tally = Counter(classify_tower_point(D, p).cls for p in sample_tower_points(D, 200, seed=0))
print("direct tower strata:", dict(sorted(tally.items())))
