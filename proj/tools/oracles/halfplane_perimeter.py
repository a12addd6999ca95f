import numpy as np
import mpmath as mp
from scipy import special
alpha = 0.5
Lam = float(mp.sqrt(mp.pi)/2*mp.gamma((1+alpha)/2)/mp.gamma((2+alpha)/2))
term1 = (2*Lam/alpha) * 2 * 0.5 * special.beta((1-alpha)/2, 1.5)

def ts(level):
    # tanh-sinh nodes/weights on (-1,1)
    h = 2.0**-level
    k = np.arange(-int(6/h), int(6/h)+1)
    t = k*h
    u = np.pi/2*np.sinh(t)
    x = np.tanh(u)
    w = h*np.pi/2*np.cosh(t)/np.cosh(u)**2
    keep = (np.abs(x) < 1 - 1e-13) & (w > 1e-300)
    return x[keep], w[keep]

def term2(lo, li):
    xo, wo = ts(lo)
    xi, wi = ts(li)
    # y1 in (-1,1), y2 in (0, sqrt(1-y1^2))
    total = 0.0
    for a, wa in zip(xo, wo):
        y1 = a
        top = np.sqrt(max(1 - y1*y1, 0.0))
        y2 = 0.5*top*(xo + 1)          # inner y2 nodes
        wy = 0.5*top*wo
        thL = np.arctan2(-y2, -1 - y1) % (2*np.pi)
        thR = np.arctan2(-y2, 1 - y1) % (2*np.pi)
        acc = np.zeros_like(y2)
        for lo_, hi_ in ((np.pi*np.ones_like(y2), thL), (thL, thR), (thR, 2*np.pi*np.ones_like(y2))):
            th = 0.5*(lo_+hi_)[:, None] + 0.5*(hi_-lo_)[:, None]*xi[None, :]
            wt = 0.5*(hi_-lo_)[:, None]*wi[None, :]
            c, s = np.cos(th), np.sin(th)
            Y1, Y2 = y1, y2[:, None]
            line = Y2/(-s)
            b = Y1*c + Y2*s
            cc = Y1*Y1 + Y2*Y2 - 1
            ex = -b + np.sqrt(np.maximum(b*b - cc, 0))
            r0 = np.maximum(line, ex)
            acc += np.sum(wt*r0**(-alpha)/alpha, axis=1)
        total += wa*np.sum(wy*acc)
    return total

for lv in (4, 5, 6):
    t2 = term2(lv, lv)
    print(lv, repr(term1), repr(t2), repr(term1+t2), flush=True)
