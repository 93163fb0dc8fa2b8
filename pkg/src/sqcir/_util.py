import numpy as np

trapezoid = getattr(np, "trapezoid", None) or np.trapz
