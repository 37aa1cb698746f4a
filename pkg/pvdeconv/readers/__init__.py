"""

    Mesh file readers, one plugin module per format

"""
