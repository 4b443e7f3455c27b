"""How many weight sets compute the same function?

Every hidden layer of width n can have its neurons relabeled in n! ways
without changing the network's output. The counts multiply across layers.
"""
import math

from permsym import orbit_size

# Three hidden layers of 128 neurons each.
count = orbit_size([128, 128, 128])
print("128,128,128 ->", f"{count.mantissa:.4f}e{math.floor(count.log10)}", f"({count.digits} digits)")

# The exact value is an ordinary Python int.
print("first 40 digits:", str(count.exact)[:40])

# Growth with depth and width, in log10 so nothing overflows.
for width in (8, 32, 128, 512):
    row = [f"{orbit_size([width] * depth).log10:10.1f}" for depth in (1, 2, 4, 8)]
    print(f"width {width:4d}: log10 for depth 1,2,4,8 ->", *row)

# Tiny architectures can be checked by hand: 3! * 2! = 12.
print("3,2 ->", orbit_size([3, 2]).exact)
