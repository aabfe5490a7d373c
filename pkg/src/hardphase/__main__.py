"""python -m hardphase"""
from .cli import main

main()
