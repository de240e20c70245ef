"""OPL offline policy learning toolkit"""
