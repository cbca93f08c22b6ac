"""Simple logger module for the application."""
import logging
import os
import sys

from dotenv import load_dotenv

load_dotenv()

# Configure logging; stderr keeps CSV on stdout clean
logging.basicConfig(
    level=os.getenv("LOG_LEVEL", "INFO").upper(),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.StreamHandler(sys.stderr)
    ]
)

logger = logging.getLogger('subgraph-entropy')
