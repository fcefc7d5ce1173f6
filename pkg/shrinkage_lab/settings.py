import os
from pathlib import Path


from dotenv import load_dotenv


# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

load_dotenv()

SECRET_KEY = os.getenv("DJANGO_SECRET_KEY", "change-me")
DEBUG = os.getenv("DJANGO_DEBUG", "False") == "True"
ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',
    'rest_framework',
    'core',
    'freq_linear',
    'bayes_shrink',
    'logistic',
    'evaluation',
    'simgen',
    'runs',
]

# The toolkit is batch-only: no request handling, no persistence.
DATABASES = {}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


REST_FRAMEWORK = {
    'DEFAULT_RENDERER_CLASSES': [
        'rest_framework.renderers.JSONRenderer',
    ],
    'DEFAULT_PARSER_CLASSES': [
        'rest_framework.parsers.JSONParser',
    ],
    'UNAUTHENTICATED_USER': None,
    'COERCE_DECIMAL_TO_STRING': False,
}


# Logging: progress and diagnostics go to stderr, data only to files/stdout
SHRINKAGE_LOG_LEVEL = os.getenv("SHRINKAGE_LOG_LEVEL", "INFO")

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'stderr': {
            'class': 'logging.StreamHandler',
            'stream': 'ext://sys.stderr',
            'formatter': 'plain',
        },
    },
    'loggers': {
        app: {
            'handlers': ['stderr'],
            'level': SHRINKAGE_LOG_LEVEL,
            'propagate': False,
        }
        for app in ('core', 'freq_linear', 'bayes_shrink', 'logistic', 'evaluation', 'simgen', 'runs')
    },
}


# MCMC defaults (bayes_shrink, logistic)
MCMC_CHAINS = int(os.getenv("MCMC_CHAINS", "4"))
MCMC_ITERATIONS = int(os.getenv("MCMC_ITERATIONS", "5000"))
MCMC_BURN_IN = int(os.getenv("MCMC_BURN_IN", "2500"))
MCMC_THIN = int(os.getenv("MCMC_THIN", "1"))
MCMC_CHAIN_JOBS = int(os.getenv("MCMC_CHAIN_JOBS", "1"))

# Marginal-likelihood ridge
RIDGE_LOG_LAMBDA_LO = float(os.getenv("RIDGE_LOG_LAMBDA_LO", "-10"))
RIDGE_LOG_LAMBDA_HI = float(os.getenv("RIDGE_LOG_LAMBDA_HI", "14"))
RIDGE_RESTARTS = int(os.getenv("RIDGE_RESTARTS", "3"))
RIDGE_TOLERANCE = float(os.getenv("RIDGE_TOLERANCE", "1e-8"))
RIDGE_MAX_ITER = int(os.getenv("RIDGE_MAX_ITER", "2000"))
FD_STEP = float(os.getenv("FD_STEP", "1e-4"))

# Cross-validated penalties
LASSO_FOLDS = int(os.getenv("LASSO_FOLDS", "10"))
LASSO_GRID_SIZE = int(os.getenv("LASSO_GRID_SIZE", "100"))
LASSO_GRID_RATIO = float(os.getenv("LASSO_GRID_RATIO", "1e-3"))
LOGISTIC_CV_FOLDS = int(os.getenv("LOGISTIC_CV_FOLDS", "10"))
LOGISTIC_GRID_SIZE = int(os.getenv("LOGISTIC_GRID_SIZE", "100"))
LOGISTIC_GRID_RATIO = float(os.getenv("LOGISTIC_GRID_RATIO", "1e-4"))

# Output
CSV_FLOAT_FORMAT = os.getenv("CSV_FLOAT_FORMAT", "%.17g")
PREDICTION_CHUNK_ROWS = int(os.getenv("PREDICTION_CHUNK_ROWS", "512"))
