from dateutil import tz

# -----------------------------
# Config (embeddings)
# -----------------------------
TZ_UTC = tz.UTC

# Walks (p, q, r y 10 caminatas de 80 pasos por nodo)
DEFAULT_P = 0.5
DEFAULT_Q = 0.5
DEFAULT_R = 0.5
DEFAULT_NUM_WALKS = 10
DEFAULT_WALK_LENGTH = 80

# Skip-gram con negative sampling
DEFAULT_DIM = 128
DEFAULT_WINDOW = 10
DEFAULT_NEGATIVES = 5
DEFAULT_EPOCHS = 1
DEFAULT_INITIAL_LR = 0.025
DEFAULT_FINAL_LR = 0.0001
SIGMOID_CLAMP = 6.0
UNIGRAM_POWER = 0.75
# Lote SGNS: min(num_nodes, este tope) centros consecutivos
SGNS_MAX_BATCH_TOKENS = 1024
# Hasta este numero de nodos el lote se acumula en una matriz densa n x n
SGNS_DENSE_MAX_NODES = 256

# Link prediction
DEFAULT_TEST_FRAC = 0.1
DEFAULT_METRIC = "euclidean"
DEFAULT_CANDIDATE_MODE = "all"
DEFAULT_CANDIDATE_SAMPLE = 1000

DEFAULT_SEED = 0
DEFAULT_THREADS = 1

ENV_FILE_NAME = ".env"
ENV_PREFIX = "MLEMBED_"
