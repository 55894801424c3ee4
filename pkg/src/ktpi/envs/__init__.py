from .geometry import Disc, Rect, region_from_dict
from .heightmap import Heightmap, HeightmapParseError, dump_heightmap, heightmap_from_function, load_heightmap, slope_at
from .worlds import (
    PlaneWorld,
    TerrainWorld,
    UnicycleWorld,
    default_plane_world,
    default_terrain_world,
    load_bundled_heightmap,
    plane_expected_reward,
    plane_moments,
    plane_world_from_dict,
    ridge_height,
    ridge_heightmap,
    sample_next,
    terrain_moments,
    terrain_world_from_dict,
    unicycle_moments,
    unicycle_step,
    unicycle_world_from_dict,
    world_from_dict,
)

__all__ = [
    "Disc", "Rect", "region_from_dict",
    "Heightmap", "HeightmapParseError", "dump_heightmap", "heightmap_from_function", "load_heightmap",
    "slope_at",
    "PlaneWorld", "TerrainWorld", "UnicycleWorld",
    "default_plane_world", "default_terrain_world", "load_bundled_heightmap",
    "plane_world_from_dict", "terrain_world_from_dict", "unicycle_world_from_dict", "world_from_dict",
    "ridge_height", "ridge_heightmap",
    "plane_moments", "plane_expected_reward", "terrain_moments", "unicycle_step", "unicycle_moments",
    "sample_next",
]
