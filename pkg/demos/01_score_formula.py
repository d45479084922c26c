# coding: utf-8

# # How the privacy score is put together
#
# A report has two exposure percentages: residual permissions and used API
# methods. Each is the weight found divided by the weight of the whole
# table, as a rounded percentage. The final score is 100 minus the rounded
# mean of the two, so 100 is the most private.

from apkprivacy import PrivacyLevel, load_seed_dataset
from apkprivacy.scoring import final_score, round_half_up

for level in PrivacyLevel:
    print(f"{level.name:<13}{level.weight:>3}")


# The seed dataset fixes the two denominators.

seed = load_seed_dataset()
print("methods:", len(seed.methods), "weight total:", seed.method_weight_total)
print("permissions:", len(seed.permissions), "weight total:", seed.permission_weight_total)


# Rounding is half-up, so a combined exposure of 1 out of 200 still costs
# a point.

print(round_half_up(0.5), round_half_up(1.5), round_half_up(2.5))
print(final_score(0, 0), final_score(1, 0), final_score(100, 0), final_score(100, 100))


# A small table of scores over the (permission, method) plane.

print("     " + "".join(f"{m:>5}" for m in range(0, 101, 25)))
for p in range(0, 101, 25):
    print(f"{p:>5}" + "".join(f"{final_score(p, m):>5}" for m in range(0, 101, 25)))
