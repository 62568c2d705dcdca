# Geometry tolerances
UNIT_QUATERNION_TOLERANCE = 1e-6
SLERP_SMALL_ANGLE = 1e-8
TIMESTAMP_TOLERANCE = 1e-9

# Sweep fusion
DEFAULT_FUSION_SWEEPS = 10
DEFAULT_CROP_MARGIN = 0.10  # meters per side
DEFAULT_MIN_POINTS = 150

# Camera projection
DEFAULT_MIN_VISIBILITY = 0.4

# Class-specific detection ranges (meters, ego xy distance), nuScenes-style.
DEFAULT_DETECTION_RANGES = {
    "car": 50.0,
    "truck": 50.0,
    "pedestrian": 40.0,
    "traffic_cone": 30.0,
    "barrier": 30.0,
}

# Curriculum schedule
DEFAULT_WARMUP_EPOCHS = 1
DEFAULT_TOTAL_EPOCHS = 250
DEFAULT_MAX_RATIO = 0.30
DEFAULT_COVERAGE = 0.8
DEFAULT_BATCH_SIZE = 64
DEFAULT_DEVICES = 1
ITERATION_SNAP_TOLERANCE = 1e-9

# Occlusion synthesis
DEFAULT_HPR_GAMMA = 1e2
DEFAULT_SHELL_MIN_FACTOR = 2.0
DEFAULT_SHELL_MAX_FACTOR = 6.0

# Contrastive training
DEFAULT_TEMPERATURE = 0.07
DEFAULT_LEARNING_RATE = 0.2
DEFAULT_WEIGHT_DECAY = 0.0
DEFAULT_HIDDEN_DIM = 64
DEFAULT_EMBED_DIM = 32
DEFAULT_MAX_POINTS = 256
DEFAULT_PROVIDER_PERTURBATION = 0.3

# Zero-shot evaluation
OUTDOOR_PROMPT = "point cloud of {}"
DEFAULT_TOP_K = (1, 5)
FEATURE_MIN_POINTS = 150

# Scene simulation
TAXONOMY = ("car", "truck", "pedestrian", "traffic_cone", "barrier")
DEFAULT_SWEEP_INTERVAL = 0.05  # 20 Hz LiDAR
DEFAULT_ANNOTATION_EVERY = 10  # keyframe every 10 sweeps -> M = 0.5 s
DEFAULT_NOISE_SIGMA = 0.02
DEFAULT_SURFACE_SAMPLES = 800
DEFAULT_CLUTTER_POINTS = 1500
DEFAULT_MAX_RANGE = 60.0
CLUTTER_CLEARANCE = 0.5
CAD_RENDER_VIEWS = 12

# Environment
THREADS_ENV_VAR = "MIXALIGN_THREADS"
