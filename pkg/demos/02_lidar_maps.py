"""
Grid maps and LIDAR localization
================================

Mazes are perfect trees; room maps are connected open layouts. An agent
moves with wall collisions and reads eight range beams plus odometry.
"""

import numpy as np

from apsuite import make
from apsuite.maps import generate_maze, generate_rooms, lidar_scan


def show(cells, pos=None):
    rows = []
    for y in range(cells.shape[0]):
        row = "".join("#" if c else "." for c in cells[y])
        if pos is not None and int(pos[1]) == y:
            x = int(pos[0])
            row = row[:x] + "@" + row[x + 1:]
        rows.append(row)
    print("\n".join(rows))


maze = generate_maze(7)
print("maze, seed 7")
show(maze.cells)

rooms = generate_rooms(7)
start = rooms.free_cells()[len(rooms.free_cells()) // 2] + 0.5
print("\nrooms, seed 7, agent at", start)
show(rooms.cells, start)
print("beam ranges (fraction of 16 cells):", np.round(lidar_scan(rooms, start), 3))

# a short episode; the prediction is the normalized position
env = make("LIDARLocRooms-v0")
obs = env.reset(seed=1)
rng = np.random.default_rng(0)
for t in range(5):
    out = env.step(rng.uniform(-1, 1, 2), env.prediction_target())
    print(f"step {t}  odometry={np.round(out.observation['odometry'], 3)}"
          f"  lidar={np.round(out.observation['lidar'], 2)}")
