#!/usr/bin/env python3
# Line-protocol evaluator for configs/external_small.json.
# Reads one JSON query per line, writes {"objective": ..., "constraints": [...]}.
import json
import math
import sys

for line in sys.stdin:
    q = json.loads(line)
    scaler, estimator = q["selection"]
    theta_c, theta_d = q["theta_c"], q["theta_d"]
    # continuous order: robust.quantile, linear.l2; integer order: max_depth, min_leaf
    loss = 0.3 if scaler == 0 else 0.25 + (theta_c[0] - 0.2) ** 2
    if estimator == 0:
        loss += 0.05 * abs(theta_d[0] - 6) + 0.01 * abs(theta_d[1] - 5)
    else:
        loss += 0.1 + 0.05 * abs(math.log10(theta_c[1]) + 1)
    latency = 0.1 * theta_d[0] if estimator == 0 else 0.2
    print(json.dumps({"objective": loss, "constraints": [latency]}), flush=True)
