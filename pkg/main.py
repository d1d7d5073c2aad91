#!/usr/bin/env python3
"""
C-SPF Risk Toolkit - Main Entry Point
Composite safety potential field calibration and driving-risk assessment
"""

import sys
from pathlib import Path

# Add the project root to Python path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

# Import after path setup
from app.cli import main

if __name__ == "__main__":
    sys.exit(main())
