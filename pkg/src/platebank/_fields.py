"""Column layout of the per-rollout result rows produced by both kernels.

Counts are carried in float64 columns; every value is an exact small integer
except REWARD_SUM, so the representation is lossless.
"""

REWARD_SUM = 0
DEMAND = 1
EMERGENCY = 2
RECEIVED_ROUTINE = 3
WASTED_EXPIRY = 4
WASTED_SLIPPAGE = 5
WASTED_Z0 = 6
ORDER_UNITS = 7
RETURNED = 8
DAYS_COUNTED = 9
LT_DEMAND = 10
LT_EMERGENCY = 11
LT_RECEIVED_ROUTINE = 12
LT_WASTED_EXPIRY = 13
LT_WASTED_SLIPPAGE = 14
LT_WASTED_Z0 = 15
LT_RETURNED = 16
FINAL_STOCK = 17
FINAL_PENDING = 18

N_FIELDS = 19
