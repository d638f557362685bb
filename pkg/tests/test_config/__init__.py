"""설정 관리 테스트 모듈"""
