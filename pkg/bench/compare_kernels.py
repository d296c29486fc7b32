"""Compare the numba kernels against the numpy fallbacks.

Checks that both paths agree to round-off and reports timings:

    python bench/compare_kernels.py [--repeat 5] [--points 20000]
"""

import argparse
import timeit

import numpy as np

from polyelast import _accel


def random_polygon(rng, n):
    # star-shaped around the origin, sorted angles, mildly perturbed radii
    t = np.sort(rng.uniform(0, 2 * np.pi, n))
    r = rng.uniform(0.6, 1.0, n)
    return np.column_stack([r * np.cos(t), r * np.sin(t)])


def regular_polygon(n):
    t = 2 * np.pi * np.arange(n) / n
    return np.column_stack([np.cos(t), np.sin(t)])


def interior_points(rng, verts, m):
    # barycentric samples of the fan triangles from the centroid
    c = verts.mean(axis=0)
    k = rng.integers(0, len(verts), m)
    a, b = rng.random(m), rng.random(m)
    flip = a + b > 1
    a[flip], b[flip] = 1 - a[flip], 1 - b[flip]
    v0, v1 = verts[k], verts[(k + 1) % len(verts)]
    return c + a[:, None] * (v0 - c) + b[:, None] * (v1 - c)


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--points", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"numba enabled: {_accel.USE_NUMBA}")
    if not _accel.USE_NUMBA:
        print("numba disabled; only the numpy path is timed")

    print(f"\nlaplace shape functions, {args.points} points")
    print(f"{'n':>4} {'numpy [ms]':>12} {'loop [ms]':>12} {'speedup':>8} {'max |dphi|':>11} {'max |dgrad|':>12}")
    for n in (4, 6, 8, 12):
        verts = regular_polygon(n) if n % 4 == 0 else random_polygon(rng, n)
        pts = interior_points(rng, verts, args.points)
        phi_a, dphi_a, _ = _accel.laplace_shape_numpy(pts, verts)
        phi_b, dphi_b, _ = _accel.laplace_shape_loop(pts, verts)  # also warms the jit
        t_np = best(lambda: _accel.laplace_shape_numpy(pts, verts), args.repeat)
        t_lp = best(lambda: _accel.laplace_shape_loop(pts, verts), args.repeat)
        print(f"{n:>4} {1e3 * t_np:12.2f} {1e3 * t_lp:12.2f} {t_np / t_lp:8.1f} "
              f"{np.abs(phi_a - phi_b).max():11.2e} {np.abs(dphi_a - dphi_b).max():12.2e}")

    print("\nhalf-plane clipping of a square by k random half-planes, 2000 calls")
    print(f"{'k':>4} {'numpy [ms]':>12} {'loop [ms]':>12} {'speedup':>8} {'max |dx|':>10}")
    square = np.array([[-2.0, -2.0], [2.0, -2.0], [2.0, 2.0], [-2.0, 2.0]])
    for k in (4, 8, 16):
        cases = []
        for _ in range(2000):
            ang = rng.uniform(0, 2 * np.pi, k)
            cases.append((np.column_stack([np.cos(ang), np.sin(ang)]), rng.uniform(0.5, 1.5, k)))
        err = 0.0
        for nrm, off in cases:
            a = _accel.clip_halfplanes_numpy(square, nrm, off)
            b = _accel.clip_halfplanes_loop(square, nrm, off)
            if a.shape != b.shape:
                err = np.inf
                break
            if len(a):
                err = max(err, np.abs(a - b).max())
        t_np = best(lambda: [_accel.clip_halfplanes_numpy(square, nrm, off) for nrm, off in cases], args.repeat)
        t_lp = best(lambda: [_accel.clip_halfplanes_loop(square, nrm, off) for nrm, off in cases], args.repeat)
        print(f"{k:>4} {1e3 * t_np:12.2f} {1e3 * t_lp:12.2f} {t_np / t_lp:8.1f} {err:10.2e}")


if __name__ == "__main__":
    main()
