"""Parallel decomposition, slow/fast classification and the interlace plan.

Splits the discrete controller into a direct gain plus first- and
second-order blocks, classifies which blocks are slow enough to update once
per metaperiod, resamples them to N*T through the W-polynomial identity, and
prices the three implementation variants.
"""

from interlaced_control import (Explicit, block_frequency, classify_poles,
                                cost_interlaced, cost_single_rate_fast,
                                cost_single_rate_slow, fixtures, make_plan,
                                partial_fraction, resample_slow_block,
                                savings_ratio)


def main():
    cd = fixtures.load_cd()
    pf = partial_fraction(cd)
    print(f"direct term: {pf.direct:.4f}")
    for bid in pf.block_ids:
        b = pf.block(bid)
        f = block_frequency(pf, bid)
        if hasattr(b, "pole"):
            print(f"  {bid}: residue {b.residue:+.5f}  pole {b.pole:.4f}"
                  f"  ({f:6.2f} rad/s)")
        else:
            print(f"  {bid}: ({b.num[0]:.3e} z + {b.num[1]:.3e}) / "
                  f"(z^2 {b.den[1]:+.4f} z {b.den[2]:+.4f})  ({f:6.2f} rad/s)")

    part = classify_poles(pf, Explicit(["b1", "b2", "b3"]))
    print(f"\nslow blocks: {part.slow}   fast blocks: {part.fast}")

    plan = make_plan(pf, part)
    print(f"plan: N = {plan.N}, slot order {plan.slots}, "
          f"strategies ({plan.input_strategy}, {plan.output_strategy})")

    print("\nresampled slow blocks at N*T:")
    for bid in plan.slots:
        rs = resample_slow_block(pf.block(bid), plan.N, pf.dt)
        print(f"  {bid}: {rs.tf_NT.num[0]:+.5f} / "
              f"(z {rs.tf_NT.den[1]:+.5f})   W = "
              + " ".join(f"{c:.4f}" for c in rs.w_poly))

    fast = cost_single_rate_fast(pf)
    slow = cost_single_rate_slow(pf, plan.N)
    inter = cost_interlaced(pf, plan)
    print("\nper-instant cost (multiplies, adds) over one metaperiod:")
    print(f"  single-rate fast: {fast.per_instant}")
    print(f"  single-rate slow: {slow.per_instant}")
    print(f"  interlaced:       {inter.per_instant}")
    print(f"worst-case multiplies drop {fast.worst[0]} -> {inter.worst[0]} "
          f"(savings ratio {savings_ratio(fast, inter):.3f})")


if __name__ == "__main__":
    main()
