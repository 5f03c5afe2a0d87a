"""Walk through the exact information engine on a four-point toy world.

The setup: an input x = (x_d, x_y) made of an independent "domain" bit and
"class" bit, a label y that copies the class bit, and a single training
domain. We compute entropies and mutual informations exactly, test
representations for sufficiency, and then brute-force every deterministic
representation map to see which ones minimize the bottleneck loss -- and
check that none of the minimizers retains domain information.
"""

import math

from oodkit.info import (
    DiscreteJoint,
    FanoQuery,
    IBLossSpec,
    RepresentationMap,
    conditional_mi,
    entropy,
    enumerate_minimizers,
    fano_min_error,
    ib_loss,
    is_sufficient,
    mi_lower_bound_from_error,
    mutual_information,
)

print("=" * 66)
print("1. entropies of simple distributions (everything in nats)")
print("=" * 66)
print(f"H(fair coin)        = {entropy([0.5, 0.5]):.6f}   (ln 2 = {math.log(2):.6f})")
print(f"H(point mass)       = {entropy([1.0, 0.0]):.6f}")
print(f"H(0.25 / 0.75 coin) = {entropy([0.25, 0.75]):.6f}")

print()
print("=" * 66)
print("2. a joint world: independent domain bit and class bit, y = class")
print("=" * 66)
joint = DiscreteJoint.from_product(
    [0.5, 0.5], [0.5, 0.5], f_y=[[0, 1], [0, 1]], f_d=[0, 0]
)
print(f"I(x_d; x_y) = {mutual_information(joint, 'x_d', 'x_y'):.6f}  (independent)")
print(f"H(x)        = {joint.entropy_of('x'):.6f}  (two fair bits)")
print(f"I(x; y)     = {mutual_information(joint, 'x', 'y'):.6f}  (one bit is label-relevant)")

print()
print("representations as deterministic maps over the support:")
z_label = RepresentationMap({(0, 0): 0, (0, 1): 1, (1, 0): 0, (1, 1): 1})
z_domain = RepresentationMap({(0, 0): 0, (0, 1): 0, (1, 0): 1, (1, 1): 1})
z_const = RepresentationMap({p: 0 for p in joint.support_points()})
for name, z in [("z = class bit", z_label), ("z = domain bit", z_domain),
                ("z = constant", z_const)]:
    print(f"  {name:<16} sufficient={str(is_sufficient(joint, z)):<5}  "
          f"I(x;y|z)={conditional_mi(joint, 'x', 'y', z):.2e}  "
          f"loss(beta=2)={ib_loss(joint, z, IBLossSpec(2.0)):+.4f}")

print()
print("=" * 66)
print("3. exhaustive search over all 4^4 = 256 maps into a 4-symbol alphabet")
print("=" * 66)
result = enumerate_minimizers(joint, IBLossSpec(10.0), z_alphabet_size=4)
print(f"maps searched: {result.n_maps}, sufficient: {result.n_sufficient}, "
      f"loss-minimizing: {len(result.minimizers)}")
print(f"every minimizer has I(x_d; z) <= {max(r.mi_domain for r in result.minimizers):.2e}")
print("(the minimizers are exactly the relabelings of the class bit --")
print(" the domain bit is always discarded, whatever beta is)")

print()
print("=" * 66)
print("4. Fano: what a probe's error certifies about mutual information")
print("=" * 66)
for err in (0.0, 0.1, 0.3, 0.5):
    bound = mi_lower_bound_from_error(err, 2, math.log(2))
    print(f"  probe error {err:.1f} over 2 domains -> I >= {bound:.4f} nats")
e_min = fano_min_error(FanoQuery(h_y=math.log(2), mi=0.0, cardinality=2))
print(f"  and with zero information the best possible error is {e_min:.3f}")
