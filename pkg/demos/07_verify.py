"""Run the verification battery on every shipped planar scene."""
from coliseum.iteration import julia_backward_cloud
from coliseum.markov import t_raster
from coliseum.scene import builtin_scenes, load_scene
from coliseum.verify import run_battery

for name in builtin_scenes():
    sc = load_scene(name)
    if sc.is_interval:
        continue
    cloud = julia_backward_cloud(sc.model.system, 20_000, rng_seed=0)
    T = t_raster(sc.model, sc.params, sc.bbox, 256, depth=sc.depth)
    rep = run_battery(sc.model, sc.params, cloud, T, sc.levels, sc.expect_fail)
    print(f"== {name} (exit {rep.exit_code})")
    print(rep.to_text(), end="")
