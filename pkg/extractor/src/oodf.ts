/**
 * OODF v1 writer (and a reader used for self-validation): the bit-exact
 * little-endian feature-file format shared with the analysis toolkit. See
 * the toolkit's docs/formats.md for the full layout.
 */

import { createHash } from 'node:crypto'
import * as fs from 'node:fs'
import * as path from 'node:path'

export const MAGIC = 'OODF'
export const VERSION = 1

export const FLAG_LOGITS = 1 << 0
export const FLAG_PENULT = 1 << 1
export const FLAG_HEAD = 1 << 2
export const FLAG_LABELS = 1 << 3

const HEADER_SIZE = 24

export interface FeatureFile {
  features: Float32Array // n x featDim, row major
  nRows: number
  featDim: number
  logits?: Float32Array // n x nClasses
  nClasses?: number
  meta: Record<string, unknown>
}

export function digestOf(data: Buffer): string {
  return 'sha256:' + createHash('sha256').update(data).digest('hex')
}

function f32Bytes(a: Float32Array): Buffer {
  const buf = Buffer.alloc(a.length * 4)
  for (let i = 0; i < a.length; i++) buf.writeFloatLE(a[i], i * 4)
  return buf
}

export function encodeFeatureFile(file: FeatureFile): { data: Buffer; sidecar: string } {
  const { nRows, featDim } = file
  if (file.features.length !== nRows * featDim) {
    throw new Error('features length does not match declared shape')
  }
  for (const v of file.features) {
    if (!Number.isFinite(v)) throw new Error('non-finite feature value')
  }
  let flags = 0
  const blocks = [f32Bytes(file.features)]
  let nClasses = 0
  if (file.logits) {
    nClasses = file.nClasses ?? 0
    if (nClasses < 2 || file.logits.length !== nRows * nClasses) {
      throw new Error('logits shape mismatch')
    }
    flags |= FLAG_LOGITS
    blocks.push(f32Bytes(file.logits))
  }

  const header = Buffer.alloc(HEADER_SIZE)
  header.write(MAGIC, 0, 'ascii')
  header.writeUInt16LE(VERSION, 4)
  header.writeUInt16LE(flags, 6)
  header.writeUInt32LE(nRows, 8)
  header.writeUInt32LE(featDim, 12)
  header.writeUInt32LE(nClasses, 16)
  header.writeUInt32LE(0, 20) // penult_dim: absent

  const data = Buffer.concat([header, ...blocks])
  const side: Record<string, unknown> = {
    format: 'oodf', version: VERSION, digest: digestOf(data), ...file.meta,
  }
  const sorted = Object.fromEntries(
    Object.entries(side).sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0)),
  )
  const sidecar = JSON.stringify(sorted, null, 2) + '\n'
  return { data, sidecar }
}

/** Write atomically (temp file + rename), returning the recorded digest. */
export function writeFeatureFile(file: FeatureFile, outPath: string): string {
  const { data, sidecar } = encodeFeatureFile(file)
  const dir = path.dirname(path.resolve(outPath))
  fs.mkdirSync(dir, { recursive: true })
  const tmp = path.join(dir, `.oodf-tmp-${process.pid}-${Date.now()}`)
  fs.writeFileSync(tmp, data)
  fs.renameSync(tmp, outPath)
  const tmpSide = tmp + '.json'
  fs.writeFileSync(tmpSide, sidecar)
  fs.renameSync(tmpSide, outPath + '.json')
  return digestOf(data)
}

export interface ParsedHeader {
  version: number
  flags: number
  nRows: number
  featDim: number
  nClasses: number
  penultDim: number
}

/** Parse and validate a written file; used by round-trip tests. */
export function readFeatureFile(filePath: string): FeatureFile & ParsedHeader {
  const data = fs.readFileSync(filePath)
  if (data.length < HEADER_SIZE) throw new Error('file shorter than header')
  if (data.toString('ascii', 0, 4) !== MAGIC) throw new Error('bad magic')
  const version = data.readUInt16LE(4)
  if (version !== VERSION) throw new Error(`unsupported version ${version}`)
  const flags = data.readUInt16LE(6)
  const nRows = data.readUInt32LE(8)
  const featDim = data.readUInt32LE(12)
  const nClasses = data.readUInt32LE(16)
  const penultDim = data.readUInt32LE(20)

  const counts = nRows * featDim + (flags & FLAG_LOGITS ? nRows * nClasses : 0)
  if (data.length !== HEADER_SIZE + counts * 4) throw new Error('size mismatch')

  const sidecarRaw = fs.readFileSync(filePath + '.json', 'utf-8')
  const sidecar = JSON.parse(sidecarRaw)
  if (sidecar.digest !== digestOf(data)) throw new Error('digest mismatch')

  const floats = new Float32Array(counts)
  for (let i = 0; i < counts; i++) floats[i] = data.readFloatLE(HEADER_SIZE + i * 4)
  const features = floats.subarray(0, nRows * featDim)
  const logits = flags & FLAG_LOGITS
    ? floats.subarray(nRows * featDim, nRows * featDim + nRows * nClasses)
    : undefined
  const meta: Record<string, unknown> = {}
  for (const [k, v] of Object.entries(sidecar)) {
    if (k !== 'format' && k !== 'version' && k !== 'digest') meta[k] = v
  }
  return {
    features: Float32Array.from(features),
    logits: logits ? Float32Array.from(logits) : undefined,
    nRows, featDim, nClasses, penultDim, version, flags, meta,
  }
}
