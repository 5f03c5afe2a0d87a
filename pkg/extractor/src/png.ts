/**
 * Minimal PNG codec: enough to decode the fixtures and folders this tool
 * targets (8-bit depth, grayscale / RGB / RGBA, non-interlaced), plus an
 * encoder used by tests to build fixture images. No external dependencies.
 */

import * as zlib from 'node:zlib'

const SIGNATURE = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a])

export interface RgbImage {
  width: number
  height: number
  /** Row-major RGB triples, values in [0, 255]. */
  pixels: Float64Array
}

export class PngError extends Error {}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c
  const pa = Math.abs(p - a)
  const pb = Math.abs(p - b)
  const pc = Math.abs(p - c)
  if (pa <= pb && pa <= pc) return a
  if (pb <= pc) return b
  return c
}

export function decodePng(data: Buffer): RgbImage {
  if (data.length < 8 || !data.subarray(0, 8).equals(SIGNATURE)) {
    throw new PngError('not a PNG file')
  }
  let width = 0
  let height = 0
  let bitDepth = 0
  let colorType = 0
  const idat: Buffer[] = []
  let pos = 8
  while (pos + 8 <= data.length) {
    const length = data.readUInt32BE(pos)
    const type = data.toString('ascii', pos + 4, pos + 8)
    const body = data.subarray(pos + 8, pos + 8 + length)
    if (body.length < length) throw new PngError('truncated chunk')
    if (type === 'IHDR') {
      width = body.readUInt32BE(0)
      height = body.readUInt32BE(4)
      bitDepth = body[8]
      colorType = body[9]
      if (body[12] !== 0) throw new PngError('interlaced PNG not supported')
    } else if (type === 'IDAT') {
      idat.push(Buffer.from(body))
    } else if (type === 'IEND') {
      break
    }
    pos += 12 + length
  }
  if (!width || !height) throw new PngError('missing IHDR')
  if (bitDepth !== 8) throw new PngError(`unsupported bit depth ${bitDepth}`)
  const channels = { 0: 1, 2: 3, 6: 4 }[colorType as 0 | 2 | 6]
  if (!channels) throw new PngError(`unsupported color type ${colorType}`)
  if (idat.length === 0) throw new PngError('no image data')

  let raw: Buffer
  try {
    raw = zlib.inflateSync(Buffer.concat(idat))
  } catch (e) {
    throw new PngError(`corrupt image data: ${(e as Error).message}`)
  }
  const stride = width * channels
  if (raw.length !== (stride + 1) * height) {
    throw new PngError('scanline data has the wrong length')
  }

  const out = Buffer.alloc(stride * height)
  for (let y = 0; y < height; y++) {
    const filter = raw[y * (stride + 1)]
    const row = raw.subarray(y * (stride + 1) + 1, (y + 1) * (stride + 1))
    const prev = y > 0 ? out.subarray((y - 1) * stride, y * stride) : null
    const cur = out.subarray(y * stride, (y + 1) * stride)
    for (let x = 0; x < stride; x++) {
      const a = x >= channels ? cur[x - channels] : 0
      const b = prev ? prev[x] : 0
      const c = x >= channels && prev ? prev[x - channels] : 0
      let v = row[x]
      switch (filter) {
        case 0: break
        case 1: v += a; break
        case 2: v += b; break
        case 3: v += Math.floor((a + b) / 2); break
        case 4: v += paeth(a, b, c); break
        default: throw new PngError(`unknown filter type ${filter}`)
      }
      cur[x] = v & 0xff
    }
  }

  const pixels = new Float64Array(width * height * 3)
  for (let i = 0; i < width * height; i++) {
    if (channels === 1) {
      const g = out[i]
      pixels[3 * i] = g
      pixels[3 * i + 1] = g
      pixels[3 * i + 2] = g
    } else {
      pixels[3 * i] = out[i * channels]
      pixels[3 * i + 1] = out[i * channels + 1]
      pixels[3 * i + 2] = out[i * channels + 2]
    }
  }
  return { width, height, pixels }
}

function chunk(type: string, body: Buffer): Buffer {
  const head = Buffer.alloc(8)
  head.writeUInt32BE(body.length, 0)
  head.write(type, 4, 'ascii')
  const crcInput = Buffer.concat([head.subarray(4), body])
  const crc = Buffer.alloc(4)
  crc.writeUInt32BE(zlib.crc32(crcInput) >>> 0, 0)
  return Buffer.concat([head, body, crc])
}

/** Encode row-major RGB triples (values clamped to [0, 255]) as a PNG. */
export function encodePng(img: RgbImage): Buffer {
  const { width, height, pixels } = img
  const stride = width * 3
  const raw = Buffer.alloc((stride + 1) * height)
  for (let y = 0; y < height; y++) {
    raw[y * (stride + 1)] = 0 // filter: none
    for (let x = 0; x < stride; x++) {
      const v = Math.round(pixels[y * stride + x])
      raw[y * (stride + 1) + 1 + x] = v < 0 ? 0 : v > 255 ? 255 : v
    }
  }
  const ihdr = Buffer.alloc(13)
  ihdr.writeUInt32BE(width, 0)
  ihdr.writeUInt32BE(height, 4)
  ihdr[8] = 8 // bit depth
  ihdr[9] = 2 // RGB
  return Buffer.concat([
    SIGNATURE,
    chunk('IHDR', ihdr),
    chunk('IDAT', zlib.deflateSync(raw, { level: 9 })),
    chunk('IEND', Buffer.alloc(0)),
  ])
}
