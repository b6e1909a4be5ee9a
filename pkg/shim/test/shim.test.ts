import assert from 'node:assert/strict'
import { execFileSync, spawnSync } from 'node:child_process'
import * as fs from 'node:fs'
import * as os from 'node:os'
import * as path from 'node:path'
import { test } from 'node:test'
import { encodePng } from '../src/image'
import { decodePfm } from '../src/pfm'

const ROOT = path.join(__dirname, '..', '..')
const MAIN = path.join(ROOT, 'dist', 'src', 'main.js')
const MODEL = path.join(ROOT, 'fixtures', 'tiny_depth.onnx')

function makeInput(dir: string, width = 40, height = 24): string {
  const rgb = new Uint8Array(width * height * 3)
  for (let i = 0; i < rgb.length; i++) rgb[i] = (i * 31) % 256
  const file = path.join(dir, 'input.png')
  fs.writeFileSync(file, encodePng({ width, height, rgb }))
  return file
}

function runShim(args: string[]): { status: number; stderr: string } {
  const res = spawnSync(process.execPath, [MAIN, ...args], { encoding: 'utf-8' })
  return { status: res.status ?? -1, stderr: res.stderr }
}

test('end to end: image in, parseable PFM out, dims preserved', () => {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'shim-e2e-'))
  const input = makeInput(dir)
  const output = path.join(dir, 'pred.pfm')
  const res = runShim(['--input', input, '--output', output, '--model', MODEL])
  assert.equal(res.status, 0, res.stderr)
  const map = decodePfm(fs.readFileSync(output))
  assert.equal(map.width, 40)
  assert.equal(map.height, 24)
  for (const v of map.values) assert.ok(Number.isFinite(v))
})

test('prediction is deterministic across runs', () => {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'shim-det-'))
  const input = makeInput(dir)
  const bytes: Buffer[] = []
  for (const name of ['a.pfm', 'b.pfm']) {
    const output = path.join(dir, name)
    const res = runShim(['--input', input, '--output', output, '--model', MODEL])
    assert.equal(res.status, 0, res.stderr)
    bytes.push(fs.readFileSync(output))
  }
  assert.ok(bytes[0].equals(bytes[1]))
})

test('large image is resampled back to input dims', () => {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'shim-big-'))
  const input = makeInput(dir, 130, 70) // not multiples of 32
  const output = path.join(dir, 'pred.pfm')
  const res = runShim(['--input', input, '--output', output, '--model', MODEL, '--size', '64'])
  assert.equal(res.status, 0, res.stderr)
  const map = decodePfm(fs.readFileSync(output))
  assert.equal(map.width, 130)
  assert.equal(map.height, 70)
})

test('missing input exits nonzero', () => {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'shim-err-'))
  const res = runShim(['--input', path.join(dir, 'none.png'), '--output', path.join(dir, 'o.pfm'), '--model', MODEL])
  assert.notEqual(res.status, 0)
  assert.match(res.stderr, /does not exist/)
})

test('missing model exits nonzero', () => {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'shim-err2-'))
  const input = makeInput(dir)
  const res = runShim(['--input', input, '--output', path.join(dir, 'o.pfm'), '--model', path.join(dir, 'none.onnx')])
  assert.notEqual(res.status, 0)
  assert.match(res.stderr, /model file .* does not exist/)
})

test('missing required flag exits nonzero with usage', () => {
  const res = runShim(['--input', 'x.png'])
  assert.notEqual(res.status, 0)
  assert.match(res.stderr, /usage/)
})

test('emitted PFM parses under the pipeline reader', (t) => {
  // cross-ecosystem check; skipped when the Python package is not importable
  const pkgRoot = path.join(ROOT, '..')
  const probe = spawnSync('python3', ['-c', 'import tomdepth'], {
    encoding: 'utf-8',
    env: { ...process.env, PYTHONPATH: path.join(pkgRoot, 'src') },
  })
  if (probe.status !== 0) {
    t.skip('python3 tomdepth not importable')
    return
  }
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'shim-interop-'))
  const input = makeInput(dir)
  const output = path.join(dir, 'pred.pfm')
  assert.equal(runShim(['--input', input, '--output', output, '--model', MODEL]).status, 0)
  const check = execFileSync(
    'python3',
    [
      '-c',
      'import sys; from tomdepth import read_pfm; m = read_pfm(sys.argv[1]); print(m.width, m.height, bool(m.valid.all()))',
      output,
    ],
    { encoding: 'utf-8', env: { ...process.env, PYTHONPATH: path.join(pkgRoot, 'src') } },
  )
  assert.equal(check.trim(), '40 24 True')
})
