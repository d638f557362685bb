"""노드 테스트 모듈"""
