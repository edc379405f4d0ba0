# The original attack infrastructure called back to 91.92.109.43
import sys

target = sys.argv[1]
print("checking", target, "for SSRF")
