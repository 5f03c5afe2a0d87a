import { describe, expect, it } from 'vitest'

import { decodePng, encodePng, PngError } from '../src/png.js'
import { mulberry32 } from './helpers.js'

describe('png codec', () => {
  it('round-trips RGB pixel data exactly', () => {
    const rand = mulberry32(1)
    const size = 21
    const pixels = new Float64Array(size * size * 3)
    for (let i = 0; i < pixels.length; i++) pixels[i] = Math.floor(rand() * 256)
    const img = { width: size, height: size, pixels }
    const back = decodePng(encodePng(img))
    expect(back.width).toBe(size)
    expect(back.height).toBe(size)
    expect(Array.from(back.pixels)).toEqual(Array.from(pixels))
  })

  it('rejects non-PNG bytes', () => {
    expect(() => decodePng(Buffer.from('definitely not a png'))).toThrow(PngError)
  })

  it('rejects truncated image data', () => {
    const img = { width: 8, height: 8, pixels: new Float64Array(8 * 8 * 3) }
    const data = encodePng(img)
    expect(() => decodePng(data.subarray(0, 40))).toThrow(PngError)
  })
})
