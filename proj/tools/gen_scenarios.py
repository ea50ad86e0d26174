#!/usr/bin/env python3
"""Writes the shipped scenario files into scenarios/.

Geometry is generated here so the roundabout arcs stay tangent and every
file carries the full parameter set with the symbol comments.
"""

import json
import math
import os
import sys

LANE_WIDTH = 3.5
ITERATIONS = 24000  # per-query iteration budget, calibrated to roughly 0.3 s of planning


def base_doc(name, lanes, route, ego, objects, duration):
    return {
        "name": name,
        "road": {
            "lanes": lanes,
            "route": route,
            "grid": {
                "comment": "p_max = P-bar (maximum cell penalty), p_invalid = p-bar (state invalid cell value)",
                "resolution": 0.25,
                "margin": 10.0,
                "p_max": 100.0,
                "p_invalid": 99.0,
            },
        },
        "ego": {
            "state": dict(zip(("x", "y", "theta", "v"), ego)),
            "vehicle": {
                "comment": "wheelbase = L^w; bounds are [min, max]",
                "wheelbase": 2.7,
                "length": 4.0,
                "width": 2.0,
                "v_bounds": [0.0, 6.0],
                "a_bounds": [-0.8, 0.8],
                "delta_bounds": [-0.4, 0.4],
            },
        },
        "objects": objects,
        "planner": {
            "comment": "budget.seconds = t^q, d_near = d^n, d_prune = d^p, t_prop = t^p, t_step = t^s, "
            "sigma_a = sigma^a, sigma_delta = sigma^delta",
            "budget": {"mode": "iterations", "iterations": ITERATIONS},
            "d_near": 0.2,
            "d_prune": 0.1,
            "t_prop": 0.4,
            "t_step": 0.04,
            "sigma_a": 0.8,
            "sigma_delta": 0.2,
            "metric_length_scale": 10.0,
            "metric_speed_scale": 2.0,
            "bounds_margin": 15.0,
        },
        "dki": {
            "comment": "d_lookahead = d^la, d_branch_max = d^i, n_candidates = N, d_reuse = d^m",
            "d_lookahead": 3.0,
            "d_branch_max": 40.0,
            "n_candidates": 100,
            "d_reuse": 1.0,
        },
        "weights": {
            "comment": "path_length = w^pl, desired_velocity = w^dv, penalty_grid = w^pg, "
            "target_clearance = w^tc, v_desired = v^d",
            "path_length": 0.05,
            "desired_velocity": 0.5,
            "penalty_grid": 0.2,
            "target_clearance": 2.0,
            "v_desired": 5.0,
        },
        "sim": {
            "comment": "update_rate = fq, goal_distance = g^d, goal_threshold = g^t",
            "duration": duration,
            "update_rate": 2.0,
            "averaging": "pooled",
            "goal_distance": 30.0,
            "goal_threshold": 2.0,
        },
    }


def lane(lane_id, points, successors=()):
    return {
        "id": lane_id,
        "width": LANE_WIDTH,
        "centerline": [[round(x, 6), round(y, 6)] for x, y in points],
        "successors": list(successors),
    }


def two_lane_road(x0=-20.0, x1=220.0):
    return [lane("right", [(x0, 0.0), (x1, 0.0)]), lane("left", [(x0, LANE_WIDTH), (x1, LANE_WIDTH)])]


def vehicle(obj_id, x, y, theta=0.0):
    return {"id": obj_id, "kind": "vehicle", "length": 4.0, "width": 2.0, "amplitude": 100.0,
            "sigma_x": 3.0, "sigma_y": 2.0, "poses": [[0.0, x, y, theta]]}


def pedestrian(obj_id, poses):
    return {"id": obj_id, "kind": "pedestrian", "length": 0.6, "width": 0.6, "amplitude": 100.0,
            "sigma_x": 3.0, "sigma_y": 2.0, "poses": [[round(v, 6) for v in p] for p in poses]}


def crossing(x, y0, t0, speed, t_end):
    """Pedestrian standing at (x, y0) until t0, then walking in +y."""
    poses = [[0.0, x, y0, math.pi / 2]]
    if t0 > 0.0:
        poses.append([t0, x, y0, math.pi / 2])
    poses.append([t_end, x, y0 + speed * (t_end - t0), math.pi / 2])
    return poses


def step_in(x, y0, y_stop, t_stop, t_end):
    """Pedestrian walking in from the roadside and stopping inside the lane at t_stop."""
    return [[0.0, x, y0, math.pi / 2], [t_stop, x, y_stop, math.pi / 2], [t_end, x, y_stop, math.pi / 2]]


def crossing_group(x, y_lead, count, spacing, speed, t_end=30.0):
    """Pedestrians walking single file in +y across the whole road; the lead starts at y_lead."""
    return [pedestrian(f"walker_{k}", crossing(x, y_lead - spacing * k, 0.0, speed, t_end)) for k in range(count)]


def arc(center, radius, a0, a1, step=1.0):
    n = max(2, int(math.ceil(abs(a1 - a0) * radius / step)) + 1)
    return [(center[0] + radius * math.cos(a0 + (a1 - a0) * i / (n - 1)),
             center[1] + radius * math.sin(a0 + (a1 - a0) * i / (n - 1))) for i in range(n)]


def rotate(points, angle):
    c, s = math.cos(angle), math.sin(angle)
    return [(c * x - s * y, s * x + c * y) for x, y in points]


def roundabout():
    """Single-lane counter-clockwise ring with four arms; route enters south, leaves at the third exit (west)."""
    ring_r, conn_r, offset = 20.0, 12.0, 5.0
    cx = offset + conn_r
    cy = -math.sqrt((ring_r + conn_r) ** 2 - cx ** 2)
    tangent = math.atan2(-cy, -cx)          # direction from the connector center to the ring center
    merge = math.atan2(cy + conn_r * math.sin(tangent), cx + conn_r * math.cos(tangent))
    arm_len, exit_len = 60.0, 60.0

    lanes = []
    nodes = []  # (ring angle, lane id attached there, is_entry)
    names = ["s", "e", "n", "w"]
    for k, name in enumerate(names):
        rot = k * math.pi / 2
        length = exit_len if name == "w" else arm_len
        entry_straight = [(offset, cy - arm_len), (offset, cy)]
        entry_arc = arc((cx, cy), conn_r, math.pi, tangent)
        exit_arc = arc((-cx, cy), conn_r, math.pi - tangent, 0.0)
        exit_straight = [(-offset, cy), (-offset, cy - length)]
        lanes.append(lane(f"{name}_in", rotate(entry_straight, rot), [f"{name}_entry"]))
        lanes.append(lane(f"{name}_entry", rotate(entry_arc, rot)))
        lanes.append(lane(f"{name}_exit", rotate(exit_arc, rot), [f"{name}_out"]))
        lanes.append(lane(f"{name}_out", rotate(exit_straight, rot)))
        nodes.append(((merge + rot) % (2 * math.pi), name, True))
        nodes.append(((math.pi - merge + rot) % (2 * math.pi), name, False))

    nodes.sort()
    by_id = {l["id"]: l for l in lanes}
    seg_ids = [f"ring_{i}" for i in range(len(nodes))]
    for i, (a0, name, is_entry) in enumerate(nodes):
        a1 = nodes[(i + 1) % len(nodes)][0]
        if a1 <= a0:
            a1 += 2 * math.pi
        _, next_name, next_is_entry = nodes[(i + 1) % len(nodes)]
        succ = [seg_ids[(i + 1) % len(nodes)]]
        if not next_is_entry:
            succ.append(f"{next_name}_exit")
        if is_entry:
            by_id[f"{name}_entry"]["successors"] = [seg_ids[i]]
        lanes.append(lane(seg_ids[i], arc((0.0, 0.0), ring_r, a0, a1), succ))

    # route: south entry, ring segments up to the west exit
    route = ["s_in", "s_entry"]
    start = next(i for i, n in enumerate(nodes) if n[1] == "s" and n[2])
    i = start
    while True:
        route.append(seg_ids[i])
        i = (i + 1) % len(nodes)
        if nodes[i][1] == "w" and not nodes[i][2]:
            break
    route += ["w_exit", "w_out"]
    ego = (offset, cy - arm_len + 10.0, math.pi / 2, 5.0)
    return lanes, route, ego


def main(out_dir):
    os.makedirs(out_dir, exist_ok=True)
    docs = {}
    docs["scenario_1_straight"] = base_doc("scenario_1_straight", two_lane_road(), ["right"],
                                           (0.0, 0.0, 0.0, 5.0), [], 10.0)
    docs["scenario_2_static_vehicle"] = base_doc("scenario_2_static_vehicle", two_lane_road(), ["right"],
                                                 (0.0, 0.0, 0.0, 5.0), [vehicle("parked", 30.0, 0.0)], 14.0)
    lanes, route, ego = roundabout()
    docs["scenario_3_roundabout"] = base_doc("scenario_3_roundabout", lanes, route, ego, [], 45.0)
    docs["scenario_4_pedestrian_steer"] = base_doc(
        "scenario_4_pedestrian_steer", two_lane_road(), ["right"], (0.0, 0.0, 0.0, 5.0),
        [pedestrian("walker", step_in(45.0, -3.0, -0.5, 4.0, 30.0))], 16.0)
    docs["scenario_5_pedestrian_brake"] = base_doc(
        "scenario_5_pedestrian_brake", two_lane_road(), ["right"], (0.0, 0.0, 0.0, 5.0),
        crossing_group(40.0, -3.25, 5, 1.5, 1.0), 20.0)

    blocked = base_doc("unreachable_goal", [lane("road", [(-20.0, 0.0), (220.0, 0.0)])], ["road"],
                       (0.0, 0.0, 0.0, 5.0), [dict(vehicle("wall", 20.0, 0.0), width=8.0)], 10.0)
    docs["unreachable_goal"] = blocked
    docs["initial_collision"] = base_doc("initial_collision", two_lane_road(), ["right"], (0.0, 0.0, 0.0, 5.0),
                                         [vehicle("overlap", 1.0, 0.0)], 10.0)
    for name, doc in docs.items():
        with open(os.path.join(out_dir, name + ".json"), "w") as f:
            json.dump(doc, f, indent=1)
            f.write("\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "scenarios"))
