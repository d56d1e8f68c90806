"""Write one flat low-noise synthetic frame for the integration tests."""

import sys

from groundseg.cloud import save_xyzir
from groundseg.synthetic import ScannerConfig, SceneConfig, generate_scene

out_path = sys.argv[1]
cloud, _ = generate_scene(
    1,
    ScannerConfig(azimuth_steps=360, range_noise=0.0005),
    SceneConfig(ramp_probability=0.0),
)
save_xyzir(cloud, out_path)
print(len(cloud))
