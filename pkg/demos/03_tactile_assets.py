"""
Tactile assets and depth rendering
==================================

Digit solids are built by stacking eroded copies of a bitmap, running
marching cubes and smoothing. The sensor renders penetration depth,
clipped at the gel thickness.
"""

import numpy as np

from apsuite import make
from apsuite.assets import (digit_to_mesh, generate_starstruck_scene, synthetic_digit,
                            wrench_mesh)
from apsuite.mesh import is_watertight, mesh_volume

img = synthetic_digit(5, seed=0)
print("bitmap", img.shape, "ink pixels", int(img.sum()))
mesh = digit_to_mesh(img)
ext = mesh.vertices.max(axis=0) - mesh.vertices.min(axis=0)
print(f"digit mesh: {len(mesh.triangles)} triangles, watertight={is_watertight(mesh)}, "
      f"extent={np.round(ext, 1)} mm, volume={mesh_volume(mesh) / 1000:.2f} cm^3")

for v in range(4):
    print(f"wrench variant {v}: volume {mesh_volume(wrench_mesh(v)) / 1000:.2f} cm^3")

layout = generate_starstruck_scene(12)
print("Starstruck layout, label", layout.label)
for kind, (x, y, th) in layout.items:
    print(f"  {kind:6s} x={x:6.1f} y={y:6.1f} theta={th:5.2f}")

# press the sensor into the tool and look at the normalized image
env = make("Toolbox-v0")
env.reset(seed=4)
x, y, _ = env.objects[0].pose
env._sensor = np.array([x, y, 8.0])
for t in range(4):
    out = env.step([0.0, 0.0, -0.3], np.zeros(4))
    img = out.observation["sensor_img"][..., 0]
    print(f"step {t}: sensor z={env.hidden_state()['sensor'][2]:.1f} mm, "
          f"touched pixels={int((img < 1).sum())}, min value={img.min():+.2f}")
print("depth image (coarse, '#' = deeper than 1 mm):")
for row in env.last_depth[::4, ::2]:
    print("".join("#" if d > 1 else ("+" if d > 0 else ".") for d in row))
