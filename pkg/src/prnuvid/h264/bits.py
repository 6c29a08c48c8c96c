"""MSB-first bit reader over RBSP bytes, with Exp-Golomb decoding."""

from ..errors import ParseError


class BitReader:
    __slots__ = ("data", "pos", "nbits")

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0
        self.nbits = 8 * len(data)

    def u(self, n):
        """Unsigned fixed-width read."""
        pos = self.pos
        end = pos + n
        if end > self.nbits:
            raise ParseError("read past end of RBSP", bit_offset=pos)
        self.pos = end
        if n == 1:
            return (self.data[pos >> 3] >> (7 - (pos & 7))) & 1
        if n == 0:
            return 0
        chunk = int.from_bytes(self.data[pos >> 3:((end - 1) >> 3) + 1], "big")
        return (chunk >> (7 - ((end - 1) & 7))) & ((1 << n) - 1)

    def flag(self):
        return self.u(1)

    def ue(self):
        """Unsigned Exp-Golomb."""
        zeros = 0
        while True:
            if self.pos >= self.nbits:
                raise ParseError("EOF inside ue(v)", bit_offset=self.pos)
            if (self.data[self.pos >> 3] >> (7 - (self.pos & 7))) & 1:
                break
            self.pos += 1
            zeros += 1
            if zeros > 32:
                raise ParseError("ue(v) prefix too long", bit_offset=self.pos)
        self.pos += 1  # the terminating 1
        if zeros == 0:
            return 0
        return (1 << zeros) - 1 + self.u(zeros)

    def se(self):
        """Signed Exp-Golomb."""
        k = self.ue()
        if k & 1:
            return (k + 1) >> 1
        return -(k >> 1)

    def te(self, max_val):
        """Truncated Exp-Golomb (used for ref_idx with 2 candidates)."""
        if max_val == 1:
            return 1 - self.u(1)
        return self.ue()

    def byte_align(self):
        while self.pos & 7:
            self.u(1)

    def more_rbsp_data(self):
        """True if bits other than the rbsp_stop_one_bit + padding remain."""
        if self.pos >= self.nbits:
            return False
        # find last 1 bit in the stream
        for byte_idx in range(len(self.data) - 1, -1, -1):
            b = self.data[byte_idx]
            if b:
                low = 0
                while not (b >> low) & 1:
                    low += 1
                last_one = 8 * byte_idx + (7 - low)
                return self.pos < last_one
        return False
